#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "leafnet/dataset.hpp"
#include "leafnet/dataset_index.hpp"
#include "leafnet/image.hpp"
#include "support/temp_dir.hpp"

using namespace leafnet;
namespace fs = std::filesystem;

namespace {

const fs::path fixtures = LEAFNET_FIXTURES;

RgbImage solid(std::size_t w, std::size_t h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    RgbImage img{w, h, {}};
    for (std::size_t i = 0; i < w * h; ++i) {
        img.pixels.insert(img.pixels.end(), {r, g, b});
    }
    return img;
}

}  // namespace

TEST(Decode, PpmRoundTrip) {
    leafnet::testing::TempDir dir;
    RgbImage img{3, 2, {}};
    for (std::uint8_t i = 0; i < 18; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i * 14));
    write_ppm(dir.path() / "x.ppm", img);
    const RgbImage back = decode_image(dir.path() / "x.ppm");
    EXPECT_EQ(back.width, 3u);
    EXPECT_EQ(back.height, 2u);
    EXPECT_EQ(back.pixels, img.pixels);
}

TEST(Decode, PgmIsReplicatedToRgb) {
    const std::string pgm = "P5\n# comment\n2 1\n255\n\x10\x80";
    const RgbImage img = decode_image_bytes({pgm.begin(), pgm.end()}, "mem.pgm");
    EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{0x10, 0x10, 0x10, 0x80, 0x80, 0x80}));
}

TEST(Decode, PngDropsAlphaAndExpandsGray) {
    const RgbImage rgba = decode_image(fixtures / "rgba_2x2.png");
    EXPECT_EQ(rgba.pixels, (std::vector<std::uint8_t>{255, 0, 0, 0, 255, 0, 0, 0, 255, 10, 20, 30}));
    const RgbImage gray = decode_image(fixtures / "gray_3x1.png");
    EXPECT_EQ(gray.pixels, (std::vector<std::uint8_t>{0, 0, 0, 128, 128, 128, 255, 255, 255}));
}

TEST(Decode, JpegFlatColourIsNearlyExact) {
    const RgbImage img = decode_image(fixtures / "flat_16x8.jpg");
    EXPECT_EQ(img.width, 16u);
    EXPECT_EQ(img.height, 8u);
    const int expect[3] = {200, 100, 50};
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        EXPECT_NEAR(img.pixels[i], expect[i % 3], 3);
    }
}

TEST(Decode, FailuresCarryThePath) {
    for (const char* name : {"truncated.jpg", "cut_scan.jpg", "does_not_exist.png"}) {
        try {
            decode_image(fixtures / name);
            FAIL() << name;
        } catch (const DecodeError& e) {
            EXPECT_NE(e.path().find(name), std::string::npos);
        }
    }
    EXPECT_THROW(decode_image_bytes({'G', 'I', 'F', '8'}, "x.gif"), DecodeError);
    const std::string short_ppm = "P6\n4 4\n255\n\x01\x02";
    EXPECT_THROW(decode_image_bytes({short_ppm.begin(), short_ppm.end()}, "s.ppm"), DecodeError);
}

TEST(Resize, IdentityWhenSizesMatch) {
    const RgbImage img = decode_image(fixtures / "rgba_2x2.png");
    const Tensor t = resize_bilinear(img, 2, 2);
    for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_EQ(t[i], static_cast<float>(img.pixels[i]));
    }
}

TEST(Resize, CheckerboardUpsampleMatchesHandWeights) {
    // 2 -> 4 with half-pixel centres samples source coordinates
    // -0.25, 0.25, 0.75, 1.25, i.e. weights 0, 0.25, 0.75, 1 after clamping.
    RgbImage board{2, 2, {0, 0, 0, 255, 255, 255, 255, 255, 255, 0, 0, 0}};
    const double w[4] = {0.0, 0.25, 0.75, 1.0};
    const Tensor t = resize_bilinear(board, 4, 4);
    for (std::size_t y = 0; y < 4; ++y) {
        for (std::size_t x = 0; x < 4; ++x) {
            const double v = 255.0 * (w[x] * (1 - w[y]) + w[y] * (1 - w[x]));
            EXPECT_NEAR(t.at(y, x, 0), v, 1e-4) << y << "," << x;
        }
    }
}

TEST(Resize, HalvingAveragesBlocks) {
    RgbImage img{4, 4, {}};
    for (std::size_t i = 0; i < 16; ++i) {
        const auto v = static_cast<std::uint8_t>(i * 16);
        img.pixels.insert(img.pixels.end(), {v, v, v});
    }
    const Tensor t = resize_bilinear(img, 2, 2);
    for (std::size_t y = 0; y < 2; ++y) {
        for (std::size_t x = 0; x < 2; ++x) {
            double s = 0;
            for (std::size_t a = 0; a < 2; ++a)
                for (std::size_t b = 0; b < 2; ++b) s += img.at(2 * y + a, 2 * x + b, 0);
            EXPECT_NEAR(t.at(y, x, 0), s / 4, 1e-4);
        }
    }
}

TEST(Preprocess, ConstantImageScalesToOne) {
    const Tensor t = preprocess(solid(7, 5, 255, 255, 255), cnn_input_format(16));
    EXPECT_EQ(t.shape(), Shape({16, 16, 3}));
    for (float v : t.data()) EXPECT_EQ(v, 1.0f);
}

TEST(Preprocess, SequenceIsRowMajorReshapeOfImage) {
    RgbImage img{4, 4, {}};
    for (std::size_t i = 0; i < 48; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i * 5));
    const Tensor image = preprocess(img, cnn_input_format(4));
    const Tensor seq = preprocess(img, lstm_input_format(4, 4));
    EXPECT_EQ(seq.shape(), Shape({4, 12}));
    std::set<float> seen;
    for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t f = 0; f < 12; ++f) {
            EXPECT_EQ(seq.at(t, f), image[t * 12 + f]);
            seen.insert(seq.at(t, f));
        }
    EXPECT_EQ(seen.size(), 48u);  // bijective: every pixel value appears once
    EXPECT_EQ(lstm_input_format().shape(), Shape({15, 1280}));
    EXPECT_THROW(lstm_input_format(80, 7), ParameterError);
}

TEST(Scan, FixtureTree) {
    const DatasetIndex idx = scan_dataset(fixtures / "tree");
    EXPECT_EQ(idx.classes, (std::vector<std::string>{"healthy", "sick"}));
    EXPECT_EQ(idx.records.size(), 8u);
    EXPECT_EQ(idx.count(Split::train), 4u);
    EXPECT_EQ(idx.count(Split::valid), 4u);
    EXPECT_TRUE(idx.warnings.empty());
    for (const DatasetRecord& r : idx.records) {
        EXPECT_EQ(idx.classes[r.label], r.path.parent_path().filename().string());
    }
    FileDataset ds(idx.split_records(Split::train), cnn_input_format(8));
    EXPECT_EQ(ds.input(0).shape(), Shape({8, 8, 3}));
}

TEST(Scan, EmptyClassAndValidOnlyClass) {
    leafnet::testing::TempDir dir;
    write_synthetic_tree(dir.path(), {"a", "b"}, 2, 1, 4, 1);
    fs::create_directories(dir.path() / "train" / "empty");
    fs::create_directories(dir.path() / "valid" / "only_valid");
    write_ppm(dir.path() / "valid" / "only_valid" / "x.ppm", solid(4, 4, 1, 2, 3));
    const DatasetIndex idx = scan_dataset(dir.path());
    EXPECT_EQ(idx.classes, (std::vector<std::string>{"a", "b", "empty", "only_valid"}));
    EXPECT_EQ(idx.count(Split::train), 4u);
    EXPECT_EQ(idx.count(Split::valid), 3u);
    EXPECT_FALSE(idx.warnings.empty());
}

TEST(Scan, MissingSplitIsStructuralError) {
    leafnet::testing::TempDir dir;
    fs::create_directories(dir.path() / "train" / "a");
    EXPECT_THROW(scan_dataset(dir.path()), StructuralError);
    EXPECT_THROW(scan_dataset(dir.path() / "nope"), StructuralError);
}

TEST(Batches, SizesAndPermutation) {
    const auto b = shuffled_batches(10, 4, 7, 1);
    ASSERT_EQ(b.size(), 3u);
    EXPECT_EQ(b[0].size(), 4u);
    EXPECT_EQ(b[1].size(), 4u);
    EXPECT_EQ(b[2].size(), 2u);
    std::set<std::size_t> all;
    for (const auto& batch : b) all.insert(batch.begin(), batch.end());
    EXPECT_EQ(all.size(), 10u);
    EXPECT_EQ(shuffled_batches(10, 4, 7, 1), b);
    EXPECT_NE(shuffled_batches(10, 4, 7, 2), b);
}

TEST(Synth, ClassesAreSeparableByNearestBaseColour) {
    const std::size_t k = 6;
    const InMemoryDataset ds = synth_dataset(k, 20, 3, Shape{8, 8, 3});
    EXPECT_EQ(ds.size(), k * 20);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Tensor x = ds.input(i);
        double mean[3] = {0, 0, 0};
        for (std::size_t e = 0; e < x.size(); ++e) {
            EXPECT_GE(x[e], 0.0f);
            EXPECT_LE(x[e], 1.0f);
            mean[e % 3] += x[e] / (x.size() / 3.0);
        }
        std::size_t best = 0;
        double best_d = 1e9;
        for (std::size_t c = 0; c < k; ++c) {
            const std::vector<double> base = synth_base_color(c, k);
            double d = 0;
            for (int ch = 0; ch < 3; ++ch) d += (mean[ch] - base[ch]) * (mean[ch] - base[ch]);
            if (d < best_d) best_d = d, best = c;
        }
        EXPECT_EQ(best, ds.label(i));
    }
    EXPECT_THROW(synth_dataset(1, 2, 3, Shape{2}), ParameterError);
}
