#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "canopy/io.hpp"
#include "canopy/types.hpp"
#include "support/oracles.hpp"

using namespace canopy;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const auto dir = fs::temp_directory_path() / "canopy_core_tests";
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

} // namespace

TEST_CASE("world_to_pixel maps cell interiors") {
    WorldTransform t{0.0, 100.0, 1.0, 100, 100};
    CHECK(world_to_pixel(t, {0.5, 99.5}) == PixelIndex{0, 0});

    WorldTransform fine{0.0, 100.0, 0.2, 100, 100};
    CHECK(world_to_pixel(fine, {2.0, 98.0}) == PixelIndex{10, 10});

    CHECK_THROWS_AS(world_to_pixel(t, {-1.0, 50.0}), OutOfBounds);
    CHECK_THROWS_AS(world_to_pixel(t, {50.0, 100.5}), OutOfBounds);
    // right/bottom outer edge belongs to no cell
    CHECK_THROWS_AS(world_to_pixel(t, {100.0, 50.0}), OutOfBounds);
}

TEST_CASE("pixel round trip stays within half a pixel per axis") {
    oracles::TestRng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        WorldTransform t;
        t.origin_x = rng.uniform(-1e5, 1e5);
        t.origin_y = rng.uniform(-1e5, 1e5);
        t.gsd = rng.uniform(0.05, 5.0);
        t.rows = 1 + static_cast<int>(rng.below(40));
        t.cols = 1 + static_cast<int>(rng.below(40));
        const int r = static_cast<int>(rng.below(static_cast<uint64_t>(t.rows)));
        const int c = static_cast<int>(rng.below(static_cast<uint64_t>(t.cols)));
        const Point p = pixel_to_world(t, {r, c});
        const PixelIndex back = world_to_pixel(t, p);
        CHECK(back == PixelIndex{r, c});
        const Point again = pixel_to_world(t, back);
        CHECK(std::abs(again.x - p.x) <= t.gsd / 2);
        CHECK(std::abs(again.y - p.y) <= t.gsd / 2);
    }
}

TEST_CASE("world round trip lands on the containing cell center") {
    oracles::TestRng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        WorldTransform t;
        t.origin_x = rng.uniform(-1e4, 1e4);
        t.origin_y = rng.uniform(-1e4, 1e4);
        t.gsd = rng.uniform(0.05, 5.0);
        t.rows = 1 + static_cast<int>(rng.below(60));
        t.cols = 1 + static_cast<int>(rng.below(60));
        const Point p{t.origin_x + rng.u01() * t.cols * t.gsd,
                      t.origin_y - rng.u01() * t.rows * t.gsd};
        PixelIndex px;
        try {
            px = world_to_pixel(t, p);
        } catch (const OutOfBounds&) {
            continue; // p drew the outer edge exactly
        }
        const Point center = pixel_to_world(t, px);
        CHECK(std::abs(center.x - p.x) <= t.gsd / 2);
        CHECK(std::abs(center.y - p.y) <= t.gsd / 2);
    }
}

TEST_CASE("tree_world_position adds the local offset") {
    Parcel parcel;
    parcel.parcel_id = "p1";
    parcel.center = {100.0, 100.0};
    parcel.radius = 25.0;

    CHECK(tree_world_position(parcel, {"t1", 0.0, 0.0, "pinus"}).x == 100.0);
    const Point p = tree_world_position(parcel, {"t2", 3.0, -4.0, "pinus"});
    CHECK(p.x == 103.0);
    CHECK(p.y == 96.0);
    // offset 28.3 m > 25 m radius
    CHECK_THROWS_AS(tree_world_position(parcel, {"t3", 20.0, 20.0, "pinus"}),
                    InvariantViolation);
}

TEST_CASE("parcel invariants") {
    Parcel p;
    p.parcel_id = "p";
    p.center = {0, 0};
    p.radius = 25.0;
    p.trees = {{"a", 1, 1, "pinus"}, {"b", 2, 2, "pinus"}};
    CHECK(p.is_monospecific());
    p.trees.push_back({"c", 3, 3, "quercus"});
    CHECK_FALSE(p.is_monospecific());
    p.validate();

    Parcel empty = p;
    empty.trees.clear();
    CHECK_FALSE(empty.is_monospecific()); // no trees, no species to assign

    Parcel dup = p;
    dup.trees.push_back({"a", 0, 0, "pinus"});
    CHECK_THROWS_AS(dup.validate(), InvariantViolation);
}

TEST_CASE("parcels CSV loader validates rows and reports line numbers") {
    const auto dir = temp_dir();
    const auto path = dir / "parcels.csv";

    SUBCASE("header only gives an empty list") {
        write_file(path, "parcel_id,center_x,center_y,radius_m,tree_id,dx_m,dy_m,species\n");
        CHECK(load_parcels(path).empty());
    }
    SUBCASE("round trip preserves everything") {
        write_file(path,
                   "parcel_id,center_x,center_y,radius_m,tree_id,dx_m,dy_m,species\n"
                   "p1,100,200,25,t1,1.5,-2.25,pinus_pinea\n"
                   "p1,100,200,25,t2,0,0,quercus_ilex\n"
                   "p2,500,500,25,t1,3,4,pinus_pinea\n");
        const auto parcels = load_parcels(path);
        REQUIRE(parcels.size() == 2);
        CHECK(parcels[0].parcel_id == "p1");
        CHECK(parcels[0].trees.size() == 2);
        CHECK_FALSE(parcels[0].is_monospecific());
        CHECK(parcels[1].is_monospecific());
        const auto copy = dir / "parcels_copy.csv";
        save_parcels(parcels, copy);
        const auto reloaded = load_parcels(copy);
        REQUIRE(reloaded.size() == 2);
        CHECK(reloaded[0].trees[0].dx == 1.5);
        CHECK(reloaded[0].trees[0].dy == -2.25);
    }
    SUBCASE("empty species names the line") {
        write_file(path,
                   "parcel_id,center_x,center_y,radius_m,tree_id,dx_m,dy_m,species\n"
                   "p1,0,0,25,t1,1,1,\n");
        CHECK_THROWS_WITH_AS(load_parcels(path), doctest::Contains(":2:"), InvariantViolation);
    }
    SUBCASE("offset beyond radius is rejected") {
        write_file(path,
                   "parcel_id,center_x,center_y,radius_m,tree_id,dx_m,dy_m,species\n"
                   "p1,0,0,25,t1,20,20,pinus\n");
        CHECK_THROWS_AS(load_parcels(path), InvariantViolation);
    }
    SUBCASE("inconsistent parcel center is rejected") {
        write_file(path,
                   "parcel_id,center_x,center_y,radius_m,tree_id,dx_m,dy_m,species\n"
                   "p1,0,0,25,t1,1,1,pinus\n"
                   "p1,5,0,25,t2,1,1,pinus\n");
        CHECK_THROWS_AS(load_parcels(path), ParseError);
    }
    SUBCASE("malformed numbers never build a parcel") {
        write_file(path,
                   "parcel_id,center_x,center_y,radius_m,tree_id,dx_m,dy_m,species\n"
                   "p1,zero,0,25,t1,1,1,pinus\n");
        CHECK_THROWS_AS(load_parcels(path), ParseError);
    }
}

TEST_CASE("detections round trip through GeoJSON and CSV") {
    const auto dir = temp_dir();
    std::vector<Detection> dets;
    Detection a;
    a.det_id = "d1";
    a.position = {10.125, -3.5};
    a.confidence = 0.75;
    a.status = DetectionStatus::verified;
    a.species = "pinus_pinea";
    a.provenance = Provenance::verified;
    dets.push_back(a);
    Detection b;
    b.det_id = "d2";
    b.position = {0.1, 0.2};
    b.confidence = 0.3;
    dets.push_back(b);

    for (const char* name : {"dets.geojson", "dets.csv"}) {
        const auto path = dir / name;
        save_detections(dets, path);
        const auto loaded = load_detections(path);
        REQUIRE(loaded.size() == 2);
        for (size_t i = 0; i < dets.size(); ++i) {
            CHECK(loaded[i].det_id == dets[i].det_id);
            CHECK(loaded[i].position.x == dets[i].position.x);
            CHECK(loaded[i].position.y == dets[i].position.y);
            CHECK(loaded[i].confidence == dets[i].confidence);
            CHECK(loaded[i].status == dets[i].status);
            CHECK(loaded[i].species == dets[i].species);
            CHECK(loaded[i].provenance == dets[i].provenance);
        }
    }
}

TEST_CASE("detection loader rejects duplicates and bad values") {
    const auto dir = temp_dir();
    const auto path = dir / "bad.csv";
    write_file(path,
               "det_id,x,y,confidence,status,species,provenance\n"
               "d1,0,0,0.5,unmatched,,none\n"
               "d1,1,1,0.5,unmatched,,none\n");
    CHECK_THROWS_AS(load_detections(path), DuplicateId);

    write_file(path,
               "det_id,x,y,confidence,status,species,provenance\n"
               "d1,0,0,1.5,unmatched,,none\n");
    CHECK_THROWS_AS(load_detections(path), InvariantViolation);

    write_file(path,
               "det_id,x,y,confidence,status,species,provenance\n"
               "d1,0,0,0.5,verified,,verified\n");
    CHECK_THROWS_AS(load_detections(path), InvariantViolation); // verified needs species
}

TEST_CASE("ASCII grid round trip and validation") {
    const auto dir = temp_dir();
    const auto path = dir / "grid.asc";

    Raster r({10.0, 20.0, 0.5, 3, 4}, 1);
    for (size_t i = 0; i < r.values.size(); ++i) r.values[i] = static_cast<float>(i) / 16.0f;
    save_ascii_grid(r, path);
    const Raster back = load_ascii_grid(path);
    CHECK(back.transform == r.transform);
    CHECK(back.values == r.values);

    write_file(path, "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n0.5 nan\n");
    CHECK_THROWS_AS(load_raster(path), Error);

    write_file(path, "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n0.5 0.5\n");
    CHECK_THROWS_AS(load_ascii_grid(path), ParseError); // too few values
}

TEST_CASE("GeoTIFF round trip keeps the grid and the transform") {
    const auto dir = temp_dir();
    const auto path = dir / "raster.tif";

    for (int bands : {1, 4}) {
        Raster r({1000.0, 2000.0, 0.25, 17, 23}, bands);
        oracles::TestRng rng(11 + bands);
        for (auto& v : r.values) v = static_cast<float>(rng.u01());
        save_geotiff(r, path);
        const Raster back = load_geotiff(path);
        CHECK(back.bands == bands);
        CHECK(back.transform == r.transform);
        CHECK(back.values == r.values);
    }
}

TEST_CASE("GeoTIFF loader names the first bad pixel") {
    const auto dir = temp_dir();
    const auto path = dir / "nan.tif";
    Raster r({0.0, 10.0, 1.0, 2, 2}, 1);
    r.values = {0.0f, 0.5f, std::numeric_limits<float>::quiet_NaN(), 1.0f};
    // save_geotiff validates, so write through the writer with a finite
    // payload first, then corrupt the value on disk.
    r.values[2] = 0.25f;
    save_geotiff(r, path);
    // float32 0.25f at band 0, pixel (1,0): offset 8 + (1*2+0)*4
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8 + 2 * 4);
    const uint32_t nan_bits = 0x7FC00000u;
    f.write(reinterpret_cast<const char*>(&nan_bits), 4);
    f.close();
    CHECK_THROWS_WITH_AS(load_raster(path), doctest::Contains("(1,0)"), InvariantViolation);
}

TEST_CASE("prediction rasters must stay in the unit interval") {
    const auto dir = temp_dir();
    const auto path = dir / "pred.tif";
    Raster r({0.0, 10.0, 1.0, 2, 2}, 1);
    r.values = {0.0f, 0.5f, 1.5f, 1.0f};
    save_geotiff(r, path);
    CHECK_THROWS_AS(load_raster(path, true), InvariantViolation);
    CHECK_NOTHROW(load_raster(path, false));
}

TEST_CASE("GeoJSON loader rejects malformed feature collections") {
    const auto dir = temp_dir();
    const auto path = dir / "bad.geojson";
    const char* bad_docs[] = {
        "not json at all",
        "{\"type\": \"Feature\"}",
        "{\"type\": \"FeatureCollection\"}",
        "{\"type\": \"FeatureCollection\", \"features\": [{\"type\": \"Feature\","
        " \"geometry\": {\"type\": \"LineString\", \"coordinates\": [[0,0],[1,1]]},"
        " \"properties\": {\"det_id\": \"d1\", \"confidence\": 0.5}}]}",
        "{\"type\": \"FeatureCollection\", \"features\": [{\"type\": \"Feature\","
        " \"geometry\": {\"type\": \"Point\", \"coordinates\": [0]},"
        " \"properties\": {\"det_id\": \"d1\", \"confidence\": 0.5}}]}",
        "{\"type\": \"FeatureCollection\", \"features\": [{\"type\": \"Feature\","
        " \"geometry\": {\"type\": \"Point\", \"coordinates\": [0, 0]},"
        " \"properties\": {\"confidence\": 0.5}}]}",
    };
    for (const char* doc : bad_docs) {
        write_file(path, doc);
        CHECK_THROWS_AS(load_detections(path), Error);
    }
}

TEST_CASE("TIFF reader rejects non-TIFF and truncated files") {
    const auto dir = temp_dir();
    const auto path = dir / "junk.tif";
    write_file(path, "this is certainly not a tiff");
    CHECK_THROWS_AS(load_geotiff(path), ParseError);

    Raster r({0.0, 4.0, 1.0, 4, 4}, 1, 0.5f);
    save_geotiff(r, path);
    const auto full = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, full / 2);
    CHECK_THROWS_AS(load_geotiff(path), ParseError);
}

TEST_CASE("loader fuzz: malformed rows never construct invalid values") {
    const auto dir = temp_dir();
    const auto path = dir / "fuzz.csv";
    oracles::TestRng rng(99);
    const std::string header = "parcel_id,center_x,center_y,radius_m,tree_id,dx_m,dy_m,species\n";
    const char* bad_rows[] = {
        "p1,0,0,25,t1,1,1",            // missing field
        "p1,0,0,25,t1,1,1,pinus,extra", // extra field
        "p1,0,0,-25,t1,1,1,pinus",      // negative radius
        "p1,0,0,25,t1,inf,1,pinus",     // non-finite offset -> exceeds radius check
        "p1,x,0,25,t1,1,1,pinus",       // unparseable number
        ",0,0,25,t1,1,1,pinus",         // empty parcel id
        "p1,0,0,25,,1,1,pinus",         // empty tree id
    };
    for (const char* row : bad_rows) {
        write_file(path, header + row + "\n");
        bool threw_typed = false;
        try {
            const auto parcels = load_parcels(path);
            for (const auto& p : parcels) p.validate();
        } catch (const Error&) {
            threw_typed = true;
        }
        CHECK_MESSAGE(threw_typed, "row accepted: ", row);
    }
    (void)rng;
}
