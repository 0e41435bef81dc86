#include "axdram/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>

#include "axdram/errors.hpp"
#include "text_util.hpp"

namespace axdram {

namespace {

std::uint32_t read_be32(std::istream& is, const std::filesystem::path& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw IoError("idx: truncated header in " + path.string());
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

}  // namespace

std::size_t Dataset::n_classes() const noexcept {
    if (labels.empty()) return 0;
    return std::size_t{*std::max_element(labels.begin(), labels.end())} + 1;
}

Dataset Dataset::slice(std::size_t first, std::size_t count) const {
    Dataset out;
    out.n_pixels = n_pixels;
    const std::size_t begin = std::min(first, size());
    const std::size_t end = std::min(size(), begin + count);
    out.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                      labels.begin() + static_cast<std::ptrdiff_t>(end));
    out.pixels.assign(pixels.begin() + static_cast<std::ptrdiff_t>(begin * n_pixels),
                      pixels.begin() + static_cast<std::ptrdiff_t>(end * n_pixels));
    return out;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
    std::ifstream img(images, std::ios::binary);
    if (!img) throw IoError("idx: cannot open " + images.string());
    std::ifstream lab(labels, std::ios::binary);
    if (!lab) throw IoError("idx: cannot open " + labels.string());

    if (read_be32(img, images) != 0x00000803) throw IoError("idx: bad image magic in " + images.string());
    const std::uint32_t n = read_be32(img, images);
    const std::uint32_t rows = read_be32(img, images);
    const std::uint32_t cols = read_be32(img, images);
    if (read_be32(lab, labels) != 0x00000801) throw IoError("idx: bad label magic in " + labels.string());
    const std::uint32_t n_labels = read_be32(lab, labels);
    if (n != n_labels) {
        throw IoError("idx: " + std::to_string(n) + " images but " + std::to_string(n_labels) + " labels");
    }

    Dataset ds;
    ds.n_pixels = std::size_t{rows} * cols;
    ds.pixels.resize(ds.n_pixels * n);
    ds.labels.resize(n);
    if (!img.read(reinterpret_cast<char*>(ds.pixels.data()), static_cast<std::streamsize>(ds.pixels.size()))) {
        throw IoError("idx: truncated image payload in " + images.string());
    }
    if (!lab.read(reinterpret_cast<char*>(ds.labels.data()), static_cast<std::streamsize>(n))) {
        throw IoError("idx: truncated label payload in " + labels.string());
    }
    return ds;
}

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("csv dataset: cannot open " + path.string());
    Dataset ds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1 && !std::isdigit(static_cast<unsigned char>(line.front()))) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() < 2) throw IoError("csv dataset: line " + std::to_string(line_no) + " too short");
        if (ds.n_pixels == 0) ds.n_pixels = cells.size() - 1;
        if (cells.size() - 1 != ds.n_pixels) {
            throw IoError("csv dataset: line " + std::to_string(line_no) + " has a different pixel count");
        }
        try {
            const int label = std::stoi(cells[0]);
            if (label < 0 || label > 255) throw IoError("label out of range");
            ds.labels.push_back(static_cast<std::uint8_t>(label));
            for (std::size_t k = 1; k < cells.size(); ++k) {
                const int px = std::stoi(cells[k]);
                if (px < 0 || px > 255) throw IoError("pixel outside 0..255");
                ds.pixels.push_back(static_cast<std::uint8_t>(px));
            }
        } catch (const std::logic_error& e) {
            throw IoError("csv dataset: line " + std::to_string(line_no) + ": " + e.what());
        } catch (const IoError& e) {
            throw IoError("csv dataset: line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return ds;
}

}  // namespace axdram
