#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mammoeval/dataset.hpp"

namespace mammoeval {

struct ImageMeta {
    std::size_t width = 0;
    std::size_t height = 0;
    int bit_depth = 0;
    int channels = 0;
};

/// Row-major grayscale raster. Samples are stored as 16-bit regardless of
/// the declared source depth; rescale_to_16bit maps lower depths up.
struct ImageU16 {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint16_t> pixels;

    std::uint16_t at(std::size_t row, std::size_t col) const {
        return pixels[row * width + col];
    }

    bool operator==(const ImageU16&) const = default;
};

struct IntensityStats {
    double mean_pixel_intensity = 0.0; // on the 0-255 scale
    std::uint64_t pixel_count = 0;
    std::vector<double> per_image_means;
};

/// Linear endpoint-preserving map v -> round_half_up(v * 65535 / (2^d - 1)).
/// 16-bit input is returned unchanged. Throws DepthError for unsupported
/// depths (only 8/12/16) or values exceeding the declared depth.
ImageU16 rescale_to_16bit(const ImageU16& image, int source_depth);

/// YES reverses each row; NO is the identity. Involution.
ImageU16 apply_horizontal_flip(const ImageU16& image, HorizontalFlip flip);

/// Mean over all pixels of all images in the dataset, projected to the
/// 0-255 scale (v * 255 / 65535). Background pixels are included.
/// Accumulation is exact integer arithmetic, so the result is independent
/// of visitation order. Requires 16-bit inputs.
IntensityStats compute_mean_intensity(const Dataset& dataset);

/// Grayscale PNG reader, 8- or 16-bit samples only.
ImageU16 read_png16(const std::filesystem::path& path, ImageMeta* meta = nullptr);

/// 16-bit grayscale PNG writer (fixtures and preprocessing output).
void write_png16(const std::filesystem::path& path, const ImageU16& image);

/// Published whole-dataset means for the mean_pixel_intensity model
/// parameter. Reference configuration values; they cannot be re-derived
/// without the source images.
struct ReferenceMeanIntensity {
    std::string_view dataset;
    double value;
};

inline constexpr ReferenceMeanIntensity kReferenceMeanIntensities[] = {
    {"INbreast", 44.4},  {"DDSM", 52.18},   {"CMMD", 18.01},
    {"NYU", 31.28},      {"OPTIMAM", 35.15}, {"CSAW-CC", 23.14},
};

} // namespace mammoeval
