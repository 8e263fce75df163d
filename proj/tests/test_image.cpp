#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <png.h>

#include <algorithm>
#include <random>

#include "mammoeval/errors.hpp"
#include "mammoeval/image.hpp"
#include "mammoeval/util.hpp"
#include "support.hpp"

using namespace mammoeval;

namespace {

ImageU16 image_of(std::size_t width, std::size_t height, std::vector<std::uint16_t> pixels) {
    ImageU16 image;
    image.width = width;
    image.height = height;
    image.pixels = std::move(pixels);
    return image;
}

ImageU16 random_image(std::mt19937_64& gen, std::size_t width, std::size_t height,
                      std::uint16_t max_value) {
    ImageU16 image;
    image.width = width;
    image.height = height;
    image.pixels.resize(width * height);
    for (auto& p : image.pixels) {
        p = static_cast<std::uint16_t>(gen() % (max_value + 1u));
    }
    return image;
}

// round_half_up(v*65535/max) restated with pre-doubled integers.
std::uint16_t rescale_oracle(std::uint32_t v, std::uint32_t max_in) {
    const std::uint64_t numerator = 2ull * v * 65535ull + max_in;
    return static_cast<std::uint16_t>(numerator / (2ull * max_in));
}

void write_png8(const std::filesystem::path& path, std::size_t width, std::size_t height,
                const std::vector<std::uint8_t>& pixels) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    REQUIRE(fp != nullptr);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    REQUIRE(setjmp(png_jmpbuf(png)) == 0);
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(height);
    for (std::size_t r = 0; r < height; ++r) {
        rows[r] = const_cast<png_bytep>(pixels.data() + r * width);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

} // namespace

TEST_CASE("rescale endpoints are exact for every supported depth") {
    for (int depth : {8, 12, 16}) {
        const std::uint16_t max_in = static_cast<std::uint16_t>((1u << depth) - 1);
        const auto out = rescale_to_16bit(image_of(2, 1, {0, max_in}), depth);
        CHECK(out.pixels[0] == 0);
        CHECK(out.pixels[1] == 65535);
    }
}

TEST_CASE("rescale matches the exact-rational oracle") {
    CHECK(rescale_to_16bit(image_of(1, 1, {2048}), 12).pixels[0] == 32776);

    std::mt19937_64 gen(321);
    for (int depth : {8, 12}) {
        const std::uint32_t max_in = (1u << depth) - 1;
        for (int trial = 0; trial < 500; ++trial) {
            const auto v = static_cast<std::uint16_t>(gen() % (max_in + 1));
            CHECK(rescale_to_16bit(image_of(1, 1, {v}), depth).pixels[0] ==
                  rescale_oracle(v, max_in));
        }
    }
}

TEST_CASE("16-bit input is returned unchanged") {
    std::mt19937_64 gen(4);
    const auto image = random_image(gen, 7, 5, 65535);
    CHECK(rescale_to_16bit(image, 16) == image);
}

TEST_CASE("rescale is monotone in the input value") {
    for (int depth : {8, 12}) {
        const std::uint32_t max_in = (1u << depth) - 1;
        std::uint16_t previous = 0;
        for (std::uint32_t v = 0; v <= max_in; ++v) {
            const auto mapped =
                rescale_to_16bit(image_of(1, 1, {static_cast<std::uint16_t>(v)}), depth).pixels[0];
            CHECK(mapped >= previous);
            previous = mapped;
        }
    }
}

TEST_CASE("rescale rejects bad depths and out-of-range values") {
    CHECK_THROWS_AS((void)rescale_to_16bit(image_of(1, 1, {0}), 10), DepthError);
    CHECK_THROWS_AS((void)rescale_to_16bit(image_of(1, 1, {0}), 0), DepthError);
    CHECK_THROWS_AS((void)rescale_to_16bit(image_of(1, 1, {256}), 8), DepthError);
    CHECK_THROWS_AS((void)rescale_to_16bit(image_of(1, 1, {4096}), 12), DepthError);
}

TEST_CASE("horizontal flip reverses rows and is an involution") {
    const auto row = image_of(3, 1, {10, 20, 30});
    const auto flipped = apply_horizontal_flip(row, HorizontalFlip::yes);
    CHECK(flipped.pixels == std::vector<std::uint16_t>{30, 20, 10});

    CHECK(apply_horizontal_flip(row, HorizontalFlip::no) == row);

    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto image = random_image(gen, 7, 5, 65535);
        const auto once = apply_horizontal_flip(image, HorizontalFlip::yes);
        CHECK(apply_horizontal_flip(once, HorizontalFlip::yes) == image);

        auto sorted_a = image.pixels;
        auto sorted_b = once.pixels;
        std::sort(sorted_a.begin(), sorted_a.end());
        std::sort(sorted_b.begin(), sorted_b.end());
        CHECK(sorted_a == sorted_b); // pixel multiset preserved
    }
}

TEST_CASE("png round trip preserves 16-bit samples") {
    testsupport::TempDir tmp("png");
    std::mt19937_64 gen(6);
    const auto image = random_image(gen, 23, 11, 65535);
    const auto path = tmp.path() / "sample.png";
    write_png16(path, image);

    ImageMeta meta;
    const auto loaded = read_png16(path, &meta);
    CHECK(loaded == image);
    CHECK(meta.bit_depth == 16);
    CHECK(meta.channels == 1);
    CHECK(meta.width == 23);
    CHECK(meta.height == 11);

    CHECK_THROWS_AS((void)read_png16(tmp.path() / "missing.png"), DecodeError);
    write_file_atomic(tmp.path() / "junk.png", "not a png");
    CHECK_THROWS_AS((void)read_png16(tmp.path() / "junk.png"), DecodeError);
}

namespace {

Dataset dataset_with_images(const std::filesystem::path& root,
                            const std::vector<std::vector<std::uint16_t>>& images) {
    Dataset dataset;
    dataset.name = "intensity";
    dataset.image_root = root;
    Exam exam;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const std::string name = "img_" + std::to_string(i);
        const std::size_t side = images[i].size() == 4 ? 2 : 1;
        ImageU16 image;
        image.width = side;
        image.height = images[i].size() / side;
        image.pixels = images[i];
        write_png16(root / (name + ".png"), image);
        exam.view(i % 2 == 0 ? ViewKey::l_cc : ViewKey::r_mlo).push_back(name);
    }
    dataset.exams.push_back(exam);
    return dataset;
}

} // namespace

TEST_CASE("mean intensity of a constant full-scale image is 255") {
    testsupport::TempDir tmp("mean1");
    const auto dataset = dataset_with_images(tmp.path(), {{65535, 65535, 65535, 65535}});
    const auto stats = compute_mean_intensity(dataset);
    CHECK(stats.mean_pixel_intensity == doctest::Approx(255.0).epsilon(1e-12));
    CHECK(stats.pixel_count == 4);
    REQUIRE(stats.per_image_means.size() == 1);
    CHECK(stats.per_image_means[0] == doctest::Approx(255.0).epsilon(1e-12));
}

TEST_CASE("mean intensity averages across images") {
    testsupport::TempDir tmp("mean2");
    const auto dataset = dataset_with_images(tmp.path(), {{0}, {65535}});
    const auto stats = compute_mean_intensity(dataset);
    CHECK(stats.mean_pixel_intensity == doctest::Approx(127.5).epsilon(1e-12));
    CHECK(stats.pixel_count == 2);
}

TEST_CASE("mean intensity is invariant under exam order") {
    testsupport::TempDir tmp("mean3");
    std::mt19937_64 gen(8);
    Dataset dataset;
    dataset.name = "perm";
    dataset.image_root = tmp.path();
    for (int k = 0; k < 6; ++k) {
        Exam exam;
        exam.exam_id = k;
        const std::string name = "e" + std::to_string(k);
        write_png16(tmp.path() / (name + ".png"), random_image(gen, 9, 4, 65535));
        exam.view(ViewKey::l_cc).push_back(name);
        dataset.exams.push_back(exam);
    }
    const double forward = compute_mean_intensity(dataset).mean_pixel_intensity;
    std::reverse(dataset.exams.begin(), dataset.exams.end());
    const double backward = compute_mean_intensity(dataset).mean_pixel_intensity;
    CHECK(forward == backward);
}

TEST_CASE("mean intensity error paths") {
    testsupport::TempDir tmp("mean4");
    Dataset empty;
    empty.name = "empty";
    empty.image_root = tmp.path();
    empty.exams.push_back(Exam{});
    CHECK_THROWS_AS((void)compute_mean_intensity(empty), EmptyDatasetError);

    Dataset missing = empty;
    missing.exams[0].view(ViewKey::l_cc).push_back("nowhere");
    CHECK_THROWS_AS((void)compute_mean_intensity(missing), DecodeError);

    // 8-bit containers must be rescaled before the dataset statistic
    write_png8(tmp.path() / "low.png", 2, 1, {5, 7});
    Dataset low = empty;
    low.exams[0].view(ViewKey::l_cc).push_back("low");
    CHECK_THROWS_AS((void)compute_mean_intensity(low), DepthError);
}

TEST_CASE("8-bit grayscale reads back with its stored depth") {
    testsupport::TempDir tmp("png8");
    write_png8(tmp.path() / "low.png", 3, 1, {0, 128, 255});
    ImageMeta meta;
    const auto image = read_png16(tmp.path() / "low.png", &meta);
    CHECK(meta.bit_depth == 8);
    CHECK(image.pixels == std::vector<std::uint16_t>{0, 128, 255});

    const auto rescaled = rescale_to_16bit(image, 8);
    CHECK(rescaled.pixels.front() == 0);
    CHECK(rescaled.pixels.back() == 65535);
    CHECK(rescaled.pixels[1] == 128 * 257);
}

TEST_CASE("reference mean intensities are documented") {
    bool found = false;
    for (const auto& entry : kReferenceMeanIntensities) {
        if (entry.dataset == "INbreast") {
            CHECK(entry.value == doctest::Approx(44.4));
            found = true;
        }
    }
    CHECK(found);
    CHECK(std::size(kReferenceMeanIntensities) == 6);
}
