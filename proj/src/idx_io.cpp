#include "sentry/idx_io.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace sentry {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_u32_be(std::istream& in, const std::string& path, const char* what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw std::runtime_error(path + ": truncated while reading " + what);
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
           std::uint32_t{b[3]};
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::vector<unsigned char> read_payload(std::istream& in, std::size_t n, const std::string& path) {
    std::vector<unsigned char> buf(n);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n)))
        throw std::runtime_error(path + ": truncated payload (wanted " + std::to_string(n) +
                                 " bytes)");
    return buf;
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path, Domain domain,
                 Split split, int num_classes) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error(images_path + ": cannot open");
    const std::uint32_t img_magic = read_u32_be(img, images_path, "magic");
    if (img_magic != kImageMagic)
        throw std::runtime_error(images_path + ": bad image magic " + std::to_string(img_magic) +
                                 " (want " + std::to_string(kImageMagic) + ")");
    const std::uint32_t n = read_u32_be(img, images_path, "count");
    const std::uint32_t rows = read_u32_be(img, images_path, "rows");
    const std::uint32_t cols = read_u32_be(img, images_path, "cols");
    const auto pixels = read_payload(img, std::size_t{n} * rows * cols, images_path);
    if (img.peek() != std::ifstream::traits_type::eof())
        throw std::runtime_error(images_path + ": trailing bytes after payload");

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error(labels_path + ": cannot open");
    const std::uint32_t lab_magic = read_u32_be(lab, labels_path, "magic");
    if (lab_magic != kLabelMagic)
        throw std::runtime_error(labels_path + ": bad label magic " + std::to_string(lab_magic) +
                                 " (want " + std::to_string(kLabelMagic) + ")");
    const std::uint32_t n_lab = read_u32_be(lab, labels_path, "count");
    if (n_lab != n)
        throw std::runtime_error(labels_path + ": " + std::to_string(n_lab) + " labels for " +
                                 std::to_string(n) + " images");
    const auto labels = read_payload(lab, n_lab, labels_path);
    if (lab.peek() != std::ifstream::traits_type::eof())
        throw std::runtime_error(labels_path + ": trailing bytes after payload");

    Dataset ds(domain, split, num_classes);
    ds.geometry = {static_cast<int>(rows), static_cast<int>(cols)};
    const std::size_t stride = std::size_t{rows} * cols;
    for (std::uint32_t i = 0; i < n; ++i) {
        if (labels[i] >= num_classes)
            throw std::runtime_error(labels_path + ": label " + std::to_string(labels[i]) +
                                     " at index " + std::to_string(i) + " exceeds " +
                                     std::to_string(num_classes) + " classes");
        std::vector<double> x(stride);
        for (std::size_t j = 0; j < stride; ++j) x[j] = pixels[i * stride + j] / 255.0;
        ds.add(std::move(x), labels[i]);
    }
    return ds;
}

void write_idx(const Dataset& ds, const std::string& images_path, const std::string& labels_path) {
    if (!ds.geometry.is_image())
        throw std::invalid_argument("write_idx: dataset carries no image geometry");
    const auto stride = static_cast<std::size_t>(ds.geometry.rows) * ds.geometry.cols;

    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error(images_path + ": cannot open for writing");
    write_u32_be(img, kImageMagic);
    write_u32_be(img, static_cast<std::uint32_t>(ds.size()));
    write_u32_be(img, static_cast<std::uint32_t>(ds.geometry.rows));
    write_u32_be(img, static_cast<std::uint32_t>(ds.geometry.cols));
    std::vector<unsigned char> row(stride);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& x = ds.x(i);
        if (x.size() != stride) throw std::runtime_error("write_idx: geometry/dim mismatch");
        for (std::size_t j = 0; j < stride; ++j)
            row[j] = static_cast<unsigned char>(std::llround(x[j] * 255.0));
        img.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(stride));
    }
    if (!img) throw std::runtime_error(images_path + ": write failed");

    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error(labels_path + ": cannot open for writing");
    write_u32_be(lab, kLabelMagic);
    write_u32_be(lab, static_cast<std::uint32_t>(ds.size()));
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int l = ds.raw_label(i);
        if (l < 0) throw std::runtime_error("write_idx: example " + std::to_string(i) +
                                            " has no label");
        const auto b = static_cast<unsigned char>(l);
        lab.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!lab) throw std::runtime_error(labels_path + ": write failed");
}

}  // namespace sentry
