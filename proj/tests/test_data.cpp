#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "honet/data.hpp"

using namespace honet;
namespace fs = std::filesystem;

TEST_CASE("spirals: counts, balance, determinism") {
    Dataset d = gen_spirals(100, 2, 0.1, 42);
    CHECK(d.size() == 200);
    CHECK(d.features.shape() == Shape{200, 2});
    int c0 = 0, c1 = 0;
    for (int y : d.labels) (y == 0 ? c0 : c1)++;
    CHECK(c0 == 100);
    CHECK(c1 == 100);

    Dataset e = gen_spirals(100, 2, 0.1, 42);
    for (std::size_t i = 0; i < d.features.numel(); ++i)
        CHECK(d.features.data()[i] == e.features.data()[i]);

    Dataset f = gen_spirals(100, 2, 0.1, 43);
    bool same = true;
    for (std::size_t i = 0; i < d.features.numel(); ++i)
        same = same && d.features.data()[i] == f.features.data()[i];
    CHECK_FALSE(same);

    CHECK_THROWS_AS(gen_spirals(0, 2, 0.1, 1), contract_error);
    CHECK_THROWS_AS(gen_spirals(10, 1, 0.1, 1), contract_error);
}

TEST_CASE("spirals: noiseless points sit exactly on their arm") {
    const double span = 3.0 * 3.141592653589793238462643383279;
    const std::size_t n = 64;
    Dataset d = gen_spirals(n, 2, 0.0, 9);
    for (std::size_t c = 0; c < 2; ++c) {
        const double rot = c * 3.141592653589793238462643383279;
        for (std::size_t i = 0; i < n; ++i) {
            const double px = d.features.data()[2 * (c * n + i)];
            const double py = d.features.data()[2 * (c * n + i) + 1];
            const double t = span * static_cast<double>(i + 1) / static_cast<double>(n);
            const double r = std::hypot(px, py);
            CHECK(r == doctest::Approx(t / span).epsilon(1e-12));  // radius proportional to angle
            CHECK(px == doctest::Approx(r * std::cos(t + rot)).epsilon(1e-9));
            CHECK(py == doctest::Approx(r * std::sin(t + rot)).epsilon(1e-9));
        }
    }
}

TEST_CASE("rings and blobs generators are deterministic and balanced") {
    Dataset r = gen_rings(32, 3, 0.02, 5);
    CHECK(r.size() == 96);
    CHECK(r.classes == 3);
    Dataset b = gen_blobs(32, 4, 0.1, 5);
    CHECK(b.size() == 128);
    Dataset b2 = gen_blobs(32, 4, 0.1, 5);
    for (std::size_t i = 0; i < b.features.numel(); ++i)
        CHECK(b.features.data()[i] == b2.features.data()[i]);
}

TEST_CASE("batches: sizes, permutation determinism, coverage") {
    Dataset d = gen_spirals(5, 2, 0.1, 3);  // n = 10
    auto bs = batches(d, 3, 77);
    REQUIRE(bs.size() == 4);
    CHECK(bs[0].labels.size() == 3);
    CHECK(bs[1].labels.size() == 3);
    CHECK(bs[2].labels.size() == 3);
    CHECK(bs[3].labels.size() == 1);

    auto bs2 = batches(d, 3, 77);
    for (std::size_t k = 0; k < bs.size(); ++k)
        for (std::size_t i = 0; i < bs[k].features.numel(); ++i)
            CHECK(bs[k].features.data()[i] == bs2[k].features.data()[i]);

    auto full = batches(d, 10, 5);
    REQUIRE(full.size() == 1);
    CHECK(full[0].labels.size() == 10);

    // every sample appears exactly once per epoch, for several epoch seeds
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        auto eb = batches(d, 4, seed);
        std::vector<int> seen;
        for (const auto& b : eb)
            for (std::size_t i = 0; i < b.labels.size(); ++i) {
                const double x = b.features.data()[2 * i];
                for (std::size_t j = 0; j < d.size(); ++j)
                    if (d.features.data()[2 * j] == x) {
                        seen.push_back(static_cast<int>(j));
                        break;
                    }
            }
        std::sort(seen.begin(), seen.end());
        REQUIRE(seen.size() == d.size());
        for (std::size_t j = 0; j < d.size(); ++j) CHECK(seen[j] == static_cast<int>(j));
    }

    CHECK_THROWS_AS(batches(d, 0, 1), contract_error);
}

namespace {
std::string write_temp(const std::string& name, const std::string& bytes) {
    const std::string path = (fs::temp_directory_path() / name).string();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    return path;
}
}  // namespace

TEST_CASE("cifar10 reader") {
    const ChannelStats stats = cifar10_default_stats();

    SUBCASE("hand-written record, label 7, all pixels 255") {
        std::string rec(3073, '\0');
        rec[0] = 7;
        for (std::size_t i = 1; i < rec.size(); ++i) rec[i] = static_cast<char>(0xFF);
        const std::string path = write_temp("honet_cifar_one.bin", rec);
        Dataset d = read_cifar10_bin(path, stats);
        REQUIRE(d.size() == 1);
        CHECK(d.labels[0] == 7);
        CHECK(d.features.shape() == Shape{1, 3, 32, 32});
        // all features within one channel equal after standardization
        for (std::size_t c = 0; c < 3; ++c) {
            const double want = (1.0 - stats.mean[c]) / stats.std[c];
            for (std::size_t p = 0; p < 1024; ++p)
                CHECK(d.features.data()[c * 1024 + p] == doctest::Approx(want).epsilon(1e-12));
        }
        fs::remove(path);
    }

    SUBCASE("empty file gives an empty dataset") {
        const std::string path = write_temp("honet_cifar_empty.bin", "");
        Dataset d = read_cifar10_bin(path, stats);
        CHECK(d.size() == 0);
        fs::remove(path);
    }

    SUBCASE("truncated file is a format error") {
        const std::string path = write_temp("honet_cifar_trunc.bin", std::string(3072, '\0'));
        CHECK_THROWS_AS(read_cifar10_bin(path, stats), format_error);
        fs::remove(path);
    }

    SUBCASE("label byte above 9 names the record") {
        std::string two(2 * 3073, '\0');
        two[3073] = 11;
        const std::string path = write_temp("honet_cifar_badlabel.bin", two);
        try {
            read_cifar10_bin(path, stats);
            FAIL("expected format_error");
        } catch (const format_error& e) {
            CHECK(std::string(e.what()).find("record 1") != std::string::npos);
        }
        fs::remove(path);
    }
}

TEST_CASE("pixel normalization round-trips within 1e-6") {
    const ChannelStats stats = cifar10_default_stats();
    for (int raw : {0, 1, 17, 128, 254, 255}) {
        const double v = static_cast<double>(raw) / 255.0;
        for (std::size_t c = 0; c < 3; ++c) {
            const double norm = (v - stats.mean[c]) / stats.std[c];
            CHECK(std::fabs(denormalize_pixel(norm, stats.mean[c], stats.std[c]) - v) < 1e-6);
        }
    }
}

TEST_CASE("idx reader") {
    auto be32 = [](std::uint32_t v) {
        std::string s(4, '\0');
        s[0] = static_cast<char>(v >> 24);
        s[1] = static_cast<char>(v >> 16);
        s[2] = static_cast<char>(v >> 8);
        s[3] = static_cast<char>(v);
        return s;
    };
    std::string img = be32(0x00000803u) + be32(2) + be32(2) + be32(3);
    for (int i = 0; i < 12; ++i) img += static_cast<char>(i * 20);
    const std::string ipath = write_temp("honet_idx_img.bin", img);
    Dataset d = read_idx_images(ipath);
    CHECK(d.features.shape() == Shape{2, 1, 2, 3});
    CHECK(d.features.data()[5] == doctest::Approx(100.0 / 255.0));

    std::string lab = be32(0x00000801u) + be32(2);
    lab += static_cast<char>(4);
    lab += static_cast<char>(9);
    const std::string lpath = write_temp("honet_idx_lab.bin", lab);
    const auto labels = read_idx_labels(lpath);
    REQUIRE(labels.size() == 2);
    CHECK(labels[0] == 4);
    CHECK(labels[1] == 9);

    CHECK_THROWS_AS(read_idx_images(lpath), format_error);  // wrong magic
    CHECK_THROWS_AS(read_idx_labels(ipath), format_error);
    fs::remove(ipath);
    fs::remove(lpath);
}

TEST_CASE("probe batch is deterministic and respects the count") {
    Dataset d = gen_spirals(50, 2, 0.1, 8, "test");
    Batch a = probe_batch(d, 32, 4);
    Batch b = probe_batch(d, 32, 4);
    CHECK(a.labels.size() == 32);
    for (std::size_t i = 0; i < a.features.numel(); ++i)
        CHECK(a.features.data()[i] == b.features.data()[i]);
    Batch all = probe_batch(d, 1000, 4);
    CHECK(all.labels.size() == d.size());
}
