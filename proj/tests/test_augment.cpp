#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "obbtable/augment.hpp"
#include "test_util.hpp"

using namespace obbtable;
using augment::RotationSpec;
using geometry::AffineMap;
using geometry::Point;
using geometry::Quad;

namespace fs = std::filesystem;

TEST_CASE("rotation_matrix") {
    SUBCASE("zero angle is the identity") {
        const AffineMap m = augment::rotation_matrix({0.0, {50, 100}});
        CHECK(m == AffineMap::identity());
    }
    SUBCASE("90 degrees about (50,100)") {
        const AffineMap m = augment::rotation_matrix({90.0, {50, 100}});
        CHECK(m.m00 == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(m.m01 == doctest::Approx(-1.0));
        CHECK(m.m02 == doctest::Approx(150.0));
        CHECK(m.m10 == doctest::Approx(1.0));
        CHECK(m.m11 == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(m.m12 == doctest::Approx(50.0));
        const Point fixed = m.apply({50, 100});
        CHECK(fixed.x == doctest::Approx(50.0));
        CHECK(fixed.y == doctest::Approx(100.0));
    }
    SUBCASE("center is a fixed point for any angle") {
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> u(0.0, 360.0);
        for (int i = 0; i < 100; ++i) {
            const Point c{u(rng), u(rng)};
            const Point out = augment::rotation_matrix({u(rng), c}).apply(c);
            CHECK(out.x == doctest::Approx(c.x).epsilon(1e-9));
            CHECK(out.y == doctest::Approx(c.y).epsilon(1e-9));
        }
    }
    SUBCASE("pure rotation has unit determinant") {
        const AffineMap m = augment::rotation_matrix({123.4, {10, 20}});
        CHECK(std::abs(m.det2() - 1.0) < 1e-9);
    }
}

TEST_CASE("adapt_bounds") {
    SUBCASE("zero angle leaves everything alone") {
        const AffineMap m = augment::rotation_matrix(RotationSpec::for_image(0.0, 100, 200));
        const auto bm = augment::adapt_bounds(m, 100, 200);
        CHECK(bm.new_width == 100);
        CHECK(bm.new_height == 200);
        CHECK(bm.map == m);
    }
    SUBCASE("90 degrees on 100x200 sends (10,20) to (180,10)") {
        const auto bm = augment::adapt_bounds(
            augment::rotation_matrix(RotationSpec::for_image(90.0, 100, 200)), 100, 200);
        CHECK(bm.new_width == 200);
        CHECK(bm.new_height == 100);
        const Point p = bm.map.apply({10, 20});
        CHECK(p.x == doctest::Approx(180.0));
        CHECK(p.y == doctest::Approx(10.0));
    }
    SUBCASE("180 degrees sends (10,20) to (90,180)") {
        const auto bm = augment::adapt_bounds(
            augment::rotation_matrix(RotationSpec::for_image(180.0, 100, 200)), 100, 200);
        CHECK(bm.new_width == 100);
        CHECK(bm.new_height == 200);
        const Point p = bm.map.apply({10, 20});
        CHECK(p.x == doctest::Approx(90.0));
        CHECK(p.y == doctest::Approx(180.0));
    }
    SUBCASE("output canvas covers all mapped source corners") {
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> angle(0.0, 360.0);
        std::uniform_int_distribution<int> dim(1, 500);
        for (int i = 0; i < 300; ++i) {
            const int w = dim(rng), h = dim(rng);
            const auto bm = augment::adapt_bounds(
                augment::rotation_matrix(RotationSpec::for_image(angle(rng), w, h)), w, h);
            double max_x = 0, max_y = 0;
            for (const Point c : {Point{0, 0}, Point{double(w), 0}, Point{double(w), double(h)},
                                  Point{0, double(h)}}) {
                const Point p = bm.map.apply(c);
                max_x = std::max(max_x, p.x);
                max_y = std::max(max_y, p.y);
            }
            CHECK(bm.new_width >= max_x - 1.0);
            CHECK(bm.new_height >= max_y - 1.0);
        }
    }
}

TEST_CASE("rotate_original") {
    raster::Raster img(10, 6, 1);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        img.pixels[i] = static_cast<std::uint8_t>(i);
    }
    std::vector<annot::Instance> instances;
    instances.push_back({Quad{{1, 1}, {4, 1}, {4, 3}, {1, 3}}, "table", 0});

    SUBCASE("zero angle leaves inputs unchanged") {
        const auto out = augment::rotate_original(
            img, RotationSpec::for_image(0.0, img.width, img.height), instances);
        CHECK(out.image == img);
        CHECK(out.instances[0].quad == instances[0].quad);
    }
    SUBCASE("canvas size is kept; rigid map preserves quad area") {
        const auto out = augment::rotate_original(
            img, RotationSpec::for_image(37.0, img.width, img.height), instances);
        CHECK(out.image.width == img.width);
        CHECK(out.image.height == img.height);
        const double before = std::abs(geometry::signed_area(instances[0].quad));
        const double after = std::abs(geometry::signed_area(out.instances[0].quad));
        CHECK(std::abs(after - before) <= 1e-6 * before);
    }
}

TEST_CASE("rotate_bounded") {
    SUBCASE("page quad under a quarter turn") {
        raster::Raster img(744, 1126, 1);
        std::vector<annot::Instance> instances;
        instances.push_back(
            {Quad{{63, 1006}, {63, 119}, {666, 119}, {666, 1006}}, "table", 0});
        const auto out = augment::rotate_bounded(
            img, RotationSpec::for_image(90.0, img.width, img.height), instances);
        CHECK(out.image.width == 1126);
        CHECK(out.image.height == 744);
        const Point a = out.instances[0].quad.a();
        CHECK(a.x == doctest::Approx(120.0));  // 1126 - 1006
        CHECK(a.y == doctest::Approx(63.0));
    }
    SUBCASE("containment and area preservation under fuzzing") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> angle(0.0, 360.0);
        std::uniform_int_distribution<int> dim(20, 300);
        for (int i = 0; i < 300; ++i) {
            const int w = dim(rng), h = dim(rng);
            Quad q = testutil::random_convex_quad(rng, 0.0, std::min(w, h));
            const auto bm = augment::adapt_bounds(
                augment::rotation_matrix(RotationSpec::for_image(angle(rng), w, h)), w, h);
            const Quad mapped = geometry::apply_affine(bm.map, q);
            for (const Point& p : mapped.v) {
                CHECK(p.x >= -1e-6);
                CHECK(p.x <= bm.new_width + 1e-6);
                CHECK(p.y >= -1e-6);
                CHECK(p.y <= bm.new_height + 1e-6);
            }
            const double before = std::abs(geometry::signed_area(q));
            const double after = std::abs(geometry::signed_area(mapped));
            CHECK(std::abs(after - before) <= 1e-6 * before);
        }
    }
    SUBCASE("90+90 equals 180 on the quad side") {
        const int w = 100, h = 200;
        const Quad q{{10, 20}, {40, 20}, {40, 60}, {10, 60}};
        const auto bm90 = augment::adapt_bounds(
            augment::rotation_matrix(RotationSpec::for_image(90.0, w, h)), w, h);
        const auto bm90b = augment::adapt_bounds(
            augment::rotation_matrix(RotationSpec::for_image(90.0, h, w)), h, w);
        const auto bm180 = augment::adapt_bounds(
            augment::rotation_matrix(RotationSpec::for_image(180.0, w, h)), w, h);
        const Quad twice = geometry::apply_affine(bm90b.map, geometry::apply_affine(bm90.map, q));
        const Quad once = geometry::apply_affine(bm180.map, q);
        for (int i = 0; i < 4; ++i) {
            CHECK(twice.v[i].x == doctest::Approx(once.v[i].x).epsilon(1e-6));
            CHECK(twice.v[i].y == doctest::Approx(once.v[i].y).epsilon(1e-6));
        }
    }
}

TEST_CASE("draw_angle") {
    SUBCASE("deterministic") {
        const double a = augment::draw_angle(42, "10497", 0.0, 360.0);
        const double b = augment::draw_angle(42, "10497", 0.0, 360.0);
        CHECK(a == b);
        CHECK(a >= 0.0);
        CHECK(a < 360.0);
        CHECK(augment::draw_angle(43, "10497", 0.0, 360.0) != a);
        CHECK(augment::draw_angle(42, "10498", 0.0, 360.0) != a);
    }
    SUBCASE("degenerate range collapses to lo") {
        const double eps = 1e-9;
        const double a = augment::draw_angle(7, "x", 5.0, 5.0 + eps);
        CHECK(a == doctest::Approx(5.0).epsilon(1e-6));
    }
    SUBCASE("roughly uniform over [0,360)") {
        double sum = 0.0;
        for (int i = 0; i < 10000; ++i) {
            sum += augment::draw_angle(1, "img" + std::to_string(i), 0.0, 360.0);
        }
        const double mean = sum / 10000.0;
        CHECK(mean > 360.0 * 0.48);
        CHECK(mean < 360.0 * 0.52);
    }
}

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("obbtable_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_fixture_dataset(const fs::path& root, int images) {
    fs::create_directories(root / "img");
    fs::create_directories(root / "ann");
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int i = 0; i < images; ++i) {
        const std::string id = "1000" + std::to_string(i);
        raster::Raster img(40 + 4 * i, 30 + 2 * i, 3);
        for (std::uint8_t& p : img.pixels) p = static_cast<std::uint8_t>(byte(rng));
        raster::save(img, (root / "img" / (id + ".png")).string());
        std::ofstream ann(root / "ann" / (id + ".txt"));
        ann << "5 5 20 5 20 15 5 15 table 0\n";
        if (i % 2 == 0) ann << "8 18 30 18 30 18.5 8 18.5 table 0\n";
    }
}

}  // namespace

TEST_CASE("generate_dataset") {
    TempDir tmp;
    write_fixture_dataset(tmp.path, 3);

    augment::GenerationConfig cfg;
    cfg.seed = 99;
    cfg.src_img_dir = tmp.path / "img";
    cfg.src_ann_dir = tmp.path / "ann";
    cfg.out_dir = tmp.path / "out";
    cfg.split = "train";

    const augment::Manifest manifest = augment::generate_dataset(cfg);
    CHECK(manifest.total_images == 3);
    CHECK(manifest.total_instances == 5);
    CHECK(manifest.skipped == 0);
    CHECK(fs::exists(cfg.out_dir / "ann_train_obbox" / "10000.txt"));
    CHECK(fs::exists(cfg.out_dir / "ann_train_hbb" / "10000.txt"));
    CHECK(fs::exists(cfg.out_dir / "images" / "10000.png"));
    CHECK(fs::exists(cfg.out_dir / "manifest.txt"));

    SUBCASE("totals equal the record sum") {
        std::size_t total = 0;
        for (const auto& rec : manifest.records) total += rec.instance_count;
        CHECK(total == manifest.total_instances);
    }
    SUBCASE("same config twice gives the same digest; jobs do not matter") {
        augment::GenerationConfig again = cfg;
        again.out_dir = tmp.path / "out2";
        const auto m2 = augment::generate_dataset(again);
        CHECK(m2.digest == manifest.digest);

        augment::GenerationConfig par = cfg;
        par.out_dir = tmp.path / "out3";
        par.jobs = 8;
        CHECK(augment::generate_dataset(par).digest == manifest.digest);
    }
    SUBCASE("test split uses the published folder names") {
        augment::GenerationConfig t = cfg;
        t.out_dir = tmp.path / "out_test";
        t.split = "test";
        (void)augment::generate_dataset(t);
        CHECK(fs::exists(t.out_dir / "ann_test_obbox"));
        CHECK(fs::exists(t.out_dir / "ann_test_hbbox"));
    }
    SUBCASE("missing annotation is skipped and reported") {
        fs::remove(tmp.path / "ann" / "10001.txt");
        augment::GenerationConfig s = cfg;
        s.out_dir = tmp.path / "out_skip";
        const auto m = augment::generate_dataset(s);
        CHECK(m.skipped == 1);
        CHECK(m.total_images == 2);
    }
    SUBCASE("rotated annotations validate clean") {
        std::ifstream in(cfg.out_dir / "ann_train_obbox" / "10002.txt");
        std::string line;
        annot::ImageAnnotation ann;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            ann.instances.push_back(annot::parse_dota_line(line));
        }
        CHECK(!ann.instances.empty());
        for (const annot::Finding& f : annot::validate(ann).findings) {
            CHECK(f.kind != annot::FindingKind::Counterclockwise);
            CHECK(f.kind != annot::FindingKind::Degenerate);
        }
    }
}

TEST_CASE("generate_dataset on an empty source directory") {
    TempDir tmp;
    fs::create_directories(tmp.path / "img");
    fs::create_directories(tmp.path / "ann");
    augment::GenerationConfig cfg;
    cfg.src_img_dir = tmp.path / "img";
    cfg.src_ann_dir = tmp.path / "ann";
    cfg.out_dir = tmp.path / "out";
    const auto manifest = augment::generate_dataset(cfg);
    CHECK(manifest.total_images == 0);
    CHECK(manifest.total_instances == 0);
    CHECK(manifest.records.empty());
}

TEST_CASE("generate_dataset rejects bad angle ranges") {
    augment::GenerationConfig cfg;
    cfg.angle_lo = 10.0;
    cfg.angle_hi = 10.0;
    CHECK_THROWS_AS((void)augment::generate_dataset(cfg), std::invalid_argument);
    cfg.angle_lo = 0.0;
    cfg.angle_hi = 400.0;
    CHECK_THROWS_AS((void)augment::generate_dataset(cfg), std::invalid_argument);
}
