#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace axdram {

/// Labeled 8-bit grayscale images, row-major, one sample after another.
struct Dataset {
    std::size_t n_pixels = 0;
    std::vector<std::uint8_t> pixels;
    std::vector<std::uint8_t> labels;

    std::size_t size() const noexcept { return labels.size(); }
    bool empty() const noexcept { return labels.empty(); }
    std::span<const std::uint8_t> image(std::size_t i) const {
        return {pixels.data() + i * n_pixels, n_pixels};
    }
    std::uint8_t label(std::size_t i) const { return labels.at(i); }

    /// max(label) + 1, or 0 when empty.
    std::size_t n_classes() const noexcept;

    /// Samples [first, first + count), clipped to the dataset.
    Dataset slice(std::size_t first, std::size_t count) const;
};

/// IDX image (magic 0x00000803) and label (0x00000801) files.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// One sample per line: label,pixel0,...,pixelN with pixels in 0..255.
/// A first line that does not start with a digit is treated as a header.
Dataset load_csv(const std::filesystem::path& path);

}  // namespace axdram
