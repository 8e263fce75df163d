#include "mammoeval/image.hpp"

#include <png.h>

#include <bit>
#include <cstdio>
#include <memory>

#include "mammoeval/errors.hpp"

namespace mammoeval {

namespace {

struct FileCloser {
    void operator()(std::FILE* fp) const {
        if (fp) {
            std::fclose(fp);
        }
    }
};
using FileHandle = std::unique_ptr<std::FILE, FileCloser>;

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;

    PngReader() {
        png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (png) {
            info = png_create_info_struct(png);
        }
    }
    ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;

    PngWriter() {
        png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (png) {
            info = png_create_info_struct(png);
        }
    }
    ~PngWriter() { png_destroy_write_struct(&png, &info); }
};

} // namespace

ImageU16 read_png16(const std::filesystem::path& path, ImageMeta* meta) {
    FileHandle fp(std::fopen(path.c_str(), "rb"));
    if (!fp) {
        throw DecodeError("cannot open image: " + path.string());
    }
    PngReader reader;
    if (!reader.png || !reader.info) {
        throw DecodeError("png reader allocation failed");
    }
    if (setjmp(png_jmpbuf(reader.png))) {
        throw DecodeError("malformed PNG: " + path.string());
    }
    png_init_io(reader.png, fp.get());
    png_read_info(reader.png, reader.info);

    const png_byte color_type = png_get_color_type(reader.png, reader.info);
    const png_byte bit_depth = png_get_bit_depth(reader.png, reader.info);
    if (color_type != PNG_COLOR_TYPE_GRAY) {
        throw DecodeError("grayscale PNG required: " + path.string());
    }
    if (bit_depth != 8 && bit_depth != 16) {
        throw DecodeError("unsupported PNG sample depth " + std::to_string(bit_depth) + ": " +
                          path.string());
    }
    if (bit_depth == 16 && std::endian::native == std::endian::little) {
        png_set_swap(reader.png); // PNG streams are big-endian
    }

    ImageU16 image;
    image.width = png_get_image_width(reader.png, reader.info);
    image.height = png_get_image_height(reader.png, reader.info);
    image.pixels.resize(image.width * image.height);

    std::vector<png_bytep> rows(image.height);
    std::vector<std::uint8_t> byte_rows; // 8-bit staging
    if (bit_depth == 16) {
        for (std::size_t r = 0; r < image.height; ++r) {
            rows[r] = reinterpret_cast<png_bytep>(image.pixels.data() + r * image.width);
        }
    } else {
        byte_rows.resize(image.width * image.height);
        for (std::size_t r = 0; r < image.height; ++r) {
            rows[r] = byte_rows.data() + r * image.width;
        }
    }
    png_read_image(reader.png, rows.data());
    png_read_end(reader.png, nullptr);

    if (bit_depth == 8) {
        for (std::size_t i = 0; i < byte_rows.size(); ++i) {
            image.pixels[i] = byte_rows[i];
        }
    }
    if (meta) {
        *meta = ImageMeta{image.width, image.height, bit_depth, 1};
    }
    return image;
}

void write_png16(const std::filesystem::path& path, const ImageU16& image) {
    if (image.width == 0 || image.height == 0 ||
        image.pixels.size() != image.width * image.height) {
        throw DecodeError("inconsistent image dimensions for " + path.string());
    }
    FileHandle fp(std::fopen(path.c_str(), "wb"));
    if (!fp) {
        throw DecodeError("cannot create image: " + path.string());
    }
    PngWriter writer;
    if (!writer.png || !writer.info) {
        throw DecodeError("png writer allocation failed");
    }
    if (setjmp(png_jmpbuf(writer.png))) {
        throw DecodeError("failed to write PNG: " + path.string());
    }
    png_init_io(writer.png, fp.get());
    png_set_IHDR(writer.png, writer.info, static_cast<png_uint_32>(image.width),
                 static_cast<png_uint_32>(image.height), 16, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(writer.png, writer.info);
    if (std::endian::native == std::endian::little) {
        png_set_swap(writer.png);
    }
    std::vector<png_bytep> rows(image.height);
    for (std::size_t r = 0; r < image.height; ++r) {
        rows[r] = reinterpret_cast<png_bytep>(
            const_cast<std::uint16_t*>(image.pixels.data() + r * image.width));
    }
    png_write_image(writer.png, rows.data());
    png_write_end(writer.png, nullptr);
}

ImageU16 rescale_to_16bit(const ImageU16& image, int source_depth) {
    if (source_depth != 8 && source_depth != 12 && source_depth != 16) {
        throw DepthError("unsupported source bit depth: " + std::to_string(source_depth));
    }
    if (source_depth == 16) {
        return image;
    }
    const std::uint32_t max_in = (1u << source_depth) - 1;
    ImageU16 out;
    out.width = image.width;
    out.height = image.height;
    out.pixels.resize(image.pixels.size());
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
        const std::uint32_t v = image.pixels[i];
        if (v > max_in) {
            throw DepthError("pixel value " + std::to_string(v) + " exceeds " +
                             std::to_string(source_depth) + "-bit range");
        }
        // exact rational v * 65535 / max_in, round half up
        const std::uint32_t numerator = v * 65535u;
        std::uint32_t q = numerator / max_in;
        if (2 * (numerator % max_in) >= max_in) {
            ++q;
        }
        out.pixels[i] = static_cast<std::uint16_t>(q);
    }
    return out;
}

ImageU16 apply_horizontal_flip(const ImageU16& image, HorizontalFlip flip) {
    if (flip == HorizontalFlip::no) {
        return image;
    }
    ImageU16 out;
    out.width = image.width;
    out.height = image.height;
    out.pixels.resize(image.pixels.size());
    for (std::size_t r = 0; r < image.height; ++r) {
        for (std::size_t c = 0; c < image.width; ++c) {
            out.pixels[r * image.width + c] = image.pixels[r * image.width + (image.width - 1 - c)];
        }
    }
    return out;
}

IntensityStats compute_mean_intensity(const Dataset& dataset) {
    IntensityStats stats;
    unsigned long long total = 0;
    for (const Exam& exam : dataset.exams) {
        for (ViewKey key : kAllViews) {
            for (const std::string& shortened : exam.view(key)) {
                auto resolved = resolve_image_path(dataset.image_root, shortened);
                if (!resolved) {
                    throw DecodeError("image file not found: " +
                                      (dataset.image_root / shortened).string());
                }
                ImageMeta meta;
                ImageU16 image = read_png16(*resolved, &meta);
                if (meta.bit_depth != 16) {
                    throw DepthError("expected 16-bit samples in " + resolved->string() +
                                     "; rescale lower bit depths first");
                }
                unsigned long long image_sum = 0;
                for (std::uint16_t v : image.pixels) {
                    image_sum += v;
                }
                stats.per_image_means.push_back(static_cast<double>(
                    255.0L * image_sum / (65535.0L * image.pixels.size())));
                total += image_sum;
                stats.pixel_count += image.pixels.size();
            }
        }
    }
    if (stats.pixel_count == 0) {
        throw EmptyDatasetError("dataset '" + dataset.name + "' has no images");
    }
    stats.mean_pixel_intensity =
        static_cast<double>(255.0L * total / (65535.0L * stats.pixel_count));
    return stats;
}

} // namespace mammoeval
