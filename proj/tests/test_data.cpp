#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "fedsched/dataset.hpp"

using namespace fedsched;

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir() {
    fs::path p = fs::temp_directory_path() / "fedsched_idx_test";
    fs::create_directories(p);
    return p;
}

void put_be32(std::vector<unsigned char>& v, uint32_t x) {
    v.push_back(static_cast<unsigned char>(x >> 24));
    v.push_back(static_cast<unsigned char>(x >> 16));
    v.push_back(static_cast<unsigned char>(x >> 8));
    v.push_back(static_cast<unsigned char>(x));
}

std::string write_file(const std::string& name, const std::vector<unsigned char>& bytes) {
    fs::path p = scratch_dir() / name;
    std::ofstream f(p, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    REQUIRE(f.good());
    return p.string();
}

std::vector<unsigned char> image_bytes(uint32_t count, uint32_t rows, uint32_t cols,
                                       const std::vector<unsigned char>& pixels,
                                       uint32_t magic = 0x00000803u) {
    std::vector<unsigned char> v;
    put_be32(v, magic);
    put_be32(v, count);
    put_be32(v, rows);
    put_be32(v, cols);
    v.insert(v.end(), pixels.begin(), pixels.end());
    return v;
}

std::vector<unsigned char> label_bytes(uint32_t count, const std::vector<unsigned char>& labels,
                                       uint32_t magic = 0x00000801u) {
    std::vector<unsigned char> v;
    put_be32(v, magic);
    put_be32(v, count);
    v.insert(v.end(), labels.begin(), labels.end());
    return v;
}

std::string thrown_message(const std::string& img, const std::string& lab) {
    try {
        load_idx(img, lab);
    } catch (const std::runtime_error& e) {
        return e.what();
    }
    return "";
}

bool same_doubles(const std::vector<double>& a, const std::vector<double>& b, size_t n) {
    return a.size() >= n && b.size() >= n &&
           std::memcmp(a.data(), b.data(), n * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("idx pair loads pixels, labels and the class count") {
    std::string img = write_file("ok-images",
                                 image_bytes(2, 2, 3, {0, 1, 2, 3, 4, 5, 255, 0, 128, 7, 9, 11}));
    std::string lab = write_file("ok-labels", label_bytes(2, {3, 0}));

    Dataset d = load_idx(img, lab);
    CHECK(d.channels == 1);
    CHECK(d.h == 2);
    CHECK(d.w == 3);
    CHECK(d.size() == 2);
    CHECK(d.image_size() == 6);
    REQUIRE(d.images.size() == 12);
    for (int k = 0; k < 6; ++k) CHECK(d.image(0)[k] == k / 255.0);
    CHECK(d.image(1)[0] == 1.0);
    CHECK(d.image(1)[1] == 0.0);
    CHECK(d.image(1)[2] == 128 / 255.0);
    REQUIRE(d.labels.size() == 2);
    CHECK(d.labels[0] == 3);
    CHECK(d.labels[1] == 0);
    // Highest label seen fixes the class count.
    CHECK(d.num_classes == 4);
}

TEST_CASE("idx loader reports each failure distinctly") {
    std::vector<unsigned char> px(12, 0);
    std::string good_img = write_file("e-img", image_bytes(2, 2, 3, px));
    std::string good_lab = write_file("e-lab", label_bytes(2, {1, 0}));

    SUBCASE("missing file") {
        std::string m = thrown_message((scratch_dir() / "absent").string(), good_lab);
        CHECK(m.find("cannot open") != std::string::npos);
    }
    SUBCASE("wrong image magic") {
        std::string bad = write_file("e-img-magic", image_bytes(2, 2, 3, px, 0x00000804u));
        std::string m = thrown_message(bad, good_lab);
        CHECK(m.find("bad magic") != std::string::npos);
        CHECK(m.find("2051") != std::string::npos);
    }
    SUBCASE("wrong label magic") {
        std::string bad = write_file("e-lab-magic", label_bytes(2, {1, 0}, 0x00000802u));
        std::string m = thrown_message(good_img, bad);
        CHECK(m.find("bad magic") != std::string::npos);
        CHECK(m.find("2049") != std::string::npos);
    }
    SUBCASE("truncated pixel data") {
        std::vector<unsigned char> short_px(7, 0);
        std::string bad = write_file("e-img-short", image_bytes(2, 2, 3, short_px));
        std::string m = thrown_message(bad, good_lab);
        CHECK(m.find("truncated") != std::string::npos);
    }
    SUBCASE("count mismatch") {
        std::string three = write_file("e-lab-three", label_bytes(3, {1, 0, 1}));
        std::string m = thrown_message(good_img, three);
        CHECK(m.find("image count 2") != std::string::npos);
        CHECK(m.find("label count 3") != std::string::npos);
    }
}

TEST_CASE("synthetic corpus is deterministic in the seed") {
    Dataset a = make_synthetic(40, 10, 8, 8, 77);
    Dataset b = make_synthetic(40, 10, 8, 8, 77);
    Dataset c = make_synthetic(40, 10, 8, 8, 78);
    CHECK(a.labels == b.labels);
    CHECK(same_doubles(a.images, b.images, a.images.size()));
    CHECK_FALSE(same_doubles(a.images, c.images, a.images.size()));
}

TEST_CASE("synthetic sample i depends only on the seed and i") {
    Dataset small = make_synthetic(50, 10, 8, 8, 7);
    Dataset big = make_synthetic(80, 10, 8, 8, 7);
    CHECK(same_doubles(small.images, big.images, small.images.size()));
}

TEST_CASE("synthetic labels cycle and pixels stay in range") {
    Dataset d = make_synthetic(67, 10, 12, 9, 5);
    CHECK(d.num_classes == 10);
    CHECK(d.h == 12);
    CHECK(d.w == 9);
    CHECK(d.image_size() == 108);
    for (size_t i = 0; i < d.size(); ++i) CHECK(d.labels[i] == static_cast<int>(i % 10));
    for (double v : d.images) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("synthetic argument checks") {
    CHECK_THROWS_AS(make_synthetic(10, 1, 8, 8, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_synthetic(10, 10, 0, 8, 1), std::invalid_argument);
}

TEST_CASE("class templates keep a usable margin") {
    double m28 = synthetic_class_margin(10, 28, 28);
    double m8 = synthetic_class_margin(10, 8, 8);
    CHECK(m28 > 0.0);
    CHECK(m8 > 0.0);
    // More pixels, more separation; pure function of its arguments.
    CHECK(m28 > m8);
    CHECK(synthetic_class_margin(10, 28, 28) == m28);
}
