#include "sentry/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace sentry {

namespace {

constexpr char kMagic[8] = {'S', 'E', 'N', 'T', 'R', 'Y', 'C', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::ostream& out, T v) {
    static_assert(std::is_integral_v<T>);
    unsigned char b[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i)
        b[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const std::string& path) {
    unsigned char b[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(b), sizeof(T)))
        throw std::runtime_error(path + ": truncated checkpoint");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t{b[i]} << (8 * i);
    return static_cast<T>(v);
}

void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_le(out, bits);
}

double get_f64(std::istream& in, const std::string& path) {
    const auto bits = get_le<std::uint64_t>(in, path);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Classifier& model,
                     const std::string& rng_state) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out.write(kMagic, 8);
    put_le(out, kVersion);
    const auto& spec = model.spec();
    put_le(out, static_cast<std::uint32_t>(spec.input_dim));
    put_le(out, static_cast<std::uint32_t>(spec.hidden.size()));
    for (int h : spec.hidden) put_le(out, static_cast<std::uint32_t>(h));
    put_le(out, static_cast<std::uint32_t>(spec.num_classes));
    put_f64(out, spec.temperature);
    put_le(out, static_cast<std::uint64_t>(model.params().size()));
    for (double p : model.params()) put_f64(out, p);
    put_le(out, static_cast<std::uint64_t>(rng_state.size()));
    out.write(rng_state.data(), static_cast<std::streamsize>(rng_state.size()));
    if (!out) throw std::runtime_error(path + ": write failed");
}

Classifier load_checkpoint(const std::string& path, std::string* rng_state) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error(path + ": not a checkpoint (bad magic)");
    const auto version = get_le<std::uint32_t>(in, path);
    if (version != kVersion)
        throw std::runtime_error(path + ": unsupported checkpoint version " +
                                 std::to_string(version));
    ClassifierSpec spec;
    spec.input_dim = static_cast<int>(get_le<std::uint32_t>(in, path));
    const auto n_hidden = get_le<std::uint32_t>(in, path);
    for (std::uint32_t i = 0; i < n_hidden; ++i)
        spec.hidden.push_back(static_cast<int>(get_le<std::uint32_t>(in, path)));
    spec.num_classes = static_cast<int>(get_le<std::uint32_t>(in, path));
    spec.temperature = get_f64(in, path);
    const auto n_params = get_le<std::uint64_t>(in, path);
    if (n_params != spec.param_count())
        throw std::runtime_error(path + ": checkpoint has " + std::to_string(n_params) +
                                 " parameters, spec needs " + std::to_string(spec.param_count()));
    std::vector<double> params(n_params);
    for (auto& p : params) p = get_f64(in, path);
    const auto state_len = get_le<std::uint64_t>(in, path);
    std::string state(state_len, '\0');
    if (state_len > 0 && !in.read(state.data(), static_cast<std::streamsize>(state_len)))
        throw std::runtime_error(path + ": truncated RNG state");
    if (rng_state) *rng_state = std::move(state);
    return Classifier(std::move(spec), std::move(params));
}

}  // namespace sentry
