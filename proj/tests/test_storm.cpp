#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "geonav/storm.hpp"

using namespace geonav;

namespace {

const std::string kSourceDir = GEONAV_SOURCE_DIR;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("horizontal_intensity worked examples") {
    CHECK(horizontal_intensity(3.0, 4.0) == doctest::Approx(5.0));
    CHECK(horizontal_intensity(-3.0, 4.0) == doctest::Approx(-5.0));
    CHECK(horizontal_intensity(0.0, 7.0) == doctest::Approx(7.0));
    CHECK(horizontal_intensity(0.0, -7.0) == doctest::Approx(7.0));
    CHECK(horizontal_intensity(0.0, 0.0) == doctest::Approx(0.0));
    CHECK(horizontal_intensity(-1.0, 0.0) == doctest::Approx(-1.0));
}

TEST_CASE("horizontal_intensity sign law on a component grid") {
    // sign follows the north component; dbx = 0 takes the positive branch
    for (double dbx : {-20.0, -1.0, 0.0, 1.0, 20.0}) {
        for (double dby : {-15.0, -2.0, 0.0, 2.0, 15.0}) {
            const double h = horizontal_intensity(dbx, dby);
            CHECK(std::abs(h) == doctest::Approx(std::hypot(dbx, dby)).epsilon(1e-14));
            if (dbx < 0.0)
                CHECK(h <= 0.0);
            else
                CHECK(h >= 0.0);
        }
    }
}

TEST_CASE("parse_storm_csv accepts rows with and without dbz") {
    const std::string text =
        "time_s,lon_deg,lat_deg,dbx_nt,dby_nt,dbz_nt\n"
        "0,135.0,35.0,-120.5,30.2,12.0\n"
        "600,140.0,30.0,-80.0,10.0,\n";
    const std::vector<StationRecord> recs = parse_storm_csv(text);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].time_s == doctest::Approx(0.0));
    CHECK(recs[0].lon == doctest::Approx(135.0));
    CHECK(recs[0].lat == doctest::Approx(35.0));
    CHECK(recs[0].dbx == doctest::Approx(-120.5));
    CHECK(recs[0].dby == doctest::Approx(30.2));
    REQUIRE(recs[0].dbz.has_value());
    CHECK(*recs[0].dbz == doctest::Approx(12.0));
    CHECK_FALSE(recs[1].dbz.has_value());
}

TEST_CASE("parse_storm_csv error reporting") {
    CHECK_THROWS_AS(parse_storm_csv(""), parse_error);
    CHECK_THROWS_AS(parse_storm_csv("lon,lat\n"), parse_error);
    // header-only file parses to an empty record list
    CHECK(parse_storm_csv("time_s,lon_deg,lat_deg,dbx_nt,dby_nt,dbz_nt\n").empty());
    const std::string header = "time_s,lon_deg,lat_deg,dbx_nt,dby_nt,dbz_nt\n";
    // out-of-range station latitude, reported with its line number
    try {
        parse_storm_csv(header + "0,140.0,95.0,1.0,1.0,\n");
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("coordinates") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_storm_csv(header + "-5,140.0,35.0,1.0,1.0,\n"), parse_error);
    CHECK_THROWS_AS(parse_storm_csv(header + "0,140.0,35.0,1.0\n"), parse_error);
    CHECK_THROWS_AS(parse_storm_csv(header + "0,140.0,35.0,xx,1.0,\n"), parse_error);
}

TEST_CASE("interpolate_anomaly reproduces station values exactly") {
    std::vector<StationRecord> recs;
    recs.push_back(StationRecord{0.0, 135.0, 35.0, -50.0, 20.0, std::optional<double>{5.0}});
    recs.push_back(StationRecord{0.0, 140.0, 30.0, 80.0, -10.0, std::nullopt});
    const AnomalySample at0 = interpolate_anomaly(recs, GeoPosition{135.0, 35.0, 0.0});
    CHECK(at0.dbx == doctest::Approx(-50.0));
    CHECK(at0.dby == doctest::Approx(20.0));
    CHECK(at0.dbz == doctest::Approx(5.0));
    CHECK(at0.dbh == doctest::Approx(horizontal_intensity(-50.0, 20.0)));
    const AnomalySample at1 = interpolate_anomaly(recs, GeoPosition{140.0, 30.0, 0.0});
    CHECK(at1.dbx == doctest::Approx(80.0));
    CHECK(at1.dbz == doctest::Approx(0.0)); // absent dbz contributes zero
}

TEST_CASE("interpolate_anomaly on a constant field is constant everywhere") {
    std::vector<StationRecord> recs;
    for (double lo : {130.0, 140.0, 150.0})
        for (double la : {25.0, 35.0})
            recs.push_back(StationRecord{0.0, lo, la, -42.0, 17.0, std::optional<double>{3.0}});
    std::mt19937_64 rng(20);
    std::uniform_real_distribution<double> lon(128.0, 152.0);
    std::uniform_real_distribution<double> lat(23.0, 37.0);
    for (int i = 0; i < 50; ++i) {
        const AnomalySample s = interpolate_anomaly(recs, GeoPosition{lon(rng), lat(rng), 0.0});
        CHECK(s.dbx == doctest::Approx(-42.0).epsilon(1e-12));
        CHECK(s.dby == doctest::Approx(17.0).epsilon(1e-12));
        CHECK(s.dbz == doctest::Approx(3.0).epsilon(1e-12));
    }
}

TEST_CASE("interpolate_anomaly averages two equidistant stations") {
    std::vector<StationRecord> recs;
    recs.push_back(StationRecord{0.0, 140.0, 31.0, 10.0, 4.0, std::nullopt});
    recs.push_back(StationRecord{0.0, 140.0, 29.0, 30.0, -8.0, std::nullopt});
    const AnomalySample s = interpolate_anomaly(recs, GeoPosition{140.0, 30.0, 0.0});
    CHECK(s.dbx == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(s.dby == doctest::Approx(-2.0).epsilon(1e-9));
}

TEST_CASE("interpolate_anomaly output stays inside the component hull") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> lon(120.0, 160.0);
    std::uniform_real_distribution<double> lat(10.0, 50.0);
    std::uniform_real_distribution<double> db(-200.0, 200.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<StationRecord> recs;
        double xmin = 1e9, xmax = -1e9;
        for (int i = 0; i < 5; ++i) {
            StationRecord r{0.0, lon(rng), lat(rng), db(rng), db(rng), std::nullopt};
            xmin = std::min(xmin, r.dbx);
            xmax = std::max(xmax, r.dbx);
            recs.push_back(r);
        }
        const AnomalySample s = interpolate_anomaly(recs, GeoPosition{lon(rng), lat(rng), 0.0});
        CHECK(s.dbx >= xmin - 1e-9);
        CHECK(s.dbx <= xmax + 1e-9);
    }
}

TEST_CASE("interpolate_anomaly rejects an empty record list") {
    CHECK_THROWS_AS(interpolate_anomaly({}, GeoPosition{0.0, 0.0, 0.0}), domain_error);
}

TEST_CASE("linear_time_mapping stretches dataset time onto mission time") {
    const TimeMapping map = linear_time_mapping(21600.0, 3600.0);
    CHECK(map(0.0) == doctest::Approx(0.0));
    CHECK(map(1800.0) == doctest::Approx(10800.0));
    CHECK(map(3600.0) == doctest::Approx(21600.0));
    CHECK_THROWS_AS(linear_time_mapping(21600.0, 0.0), domain_error);
}

TEST_CASE("AnomalyTable from a single station is uniform over the grid") {
    std::vector<StationRecord> recs;
    recs.push_back(StationRecord{0.0, 140.0, 30.0, -60.0, 25.0, std::nullopt});
    AnomalyTable::GridSpec grid;
    grid.lon_min = 135.0;
    grid.lon_max = 145.0;
    grid.lat_min = 25.0;
    grid.lat_max = 35.0;
    grid.cell_deg = 1.0;
    const AnomalyTable t = AnomalyTable::build(recs, grid, 3600.0);
    CHECK(t.time_slices() == 1);
    const TimeMapping id = [](double s) { return s; };
    const AnomalySample a = t.at(GeoPosition{137.2, 27.9, 0.0}, 0.0, id);
    const AnomalySample b = t.at(GeoPosition{144.5, 34.5, 0.0}, 0.0, id);
    CHECK(a.dbx == doctest::Approx(-60.0));
    CHECK(b.dbx == doctest::Approx(-60.0));
    CHECK(a.dby == doctest::Approx(25.0));
}

TEST_CASE("AnomalyTable clamps the time lookup to the dataset window") {
    std::vector<StationRecord> recs;
    recs.push_back(StationRecord{0.0, 140.0, 30.0, 10.0, 0.0, std::nullopt});
    recs.push_back(StationRecord{3600.0, 140.0, 30.0, 50.0, 0.0, std::nullopt});
    AnomalyTable::GridSpec grid{135.0, 145.0, 25.0, 35.0, 1.0};
    const AnomalyTable t = AnomalyTable::build(recs, grid, 3600.0);
    REQUIRE(t.time_slices() == 2);
    const TimeMapping id = [](double s) { return s; };
    const GeoPosition p{140.0, 30.0, 0.0};
    CHECK(t.at(p, 0.0, id).dbx == doctest::Approx(10.0));
    CHECK(t.at(p, 3700.0, id).dbx == doctest::Approx(50.0));
    // beyond the dataset end: clamped to the last slice
    CHECK(t.at(p, 1e9, id).dbx == doctest::Approx(50.0));
    // before the start (a mapping could produce this): clamped to the first
    const TimeMapping neg = [](double) { return -100.0; };
    CHECK(t.at(p, 0.0, neg).dbx == doctest::Approx(10.0));
}

TEST_CASE("AnomalyTable rejects empty time bins and off-grid queries") {
    std::vector<StationRecord> recs;
    recs.push_back(StationRecord{0.0, 140.0, 30.0, 10.0, 0.0, std::nullopt});
    recs.push_back(StationRecord{7200.0, 140.0, 30.0, 50.0, 0.0, std::nullopt});
    AnomalyTable::GridSpec grid{135.0, 145.0, 25.0, 35.0, 1.0};
    // bin 1 (3600..7200) has no records
    try {
        AnomalyTable::build(recs, grid, 3600.0);
        FAIL("expected domain_error");
    } catch (const domain_error& e) {
        CHECK(std::string(e.what()).find("time bin 1") != std::string::npos);
    }
    recs[1].time_s = 1800.0;
    const AnomalyTable t = AnomalyTable::build(recs, grid, 3600.0);
    const TimeMapping id = [](double s) { return s; };
    CHECK_THROWS_AS(t.at(GeoPosition{100.0, 30.0, 0.0}, 0.0, id), domain_error);
    CHECK_THROWS_AS(t.at(GeoPosition{140.0, 50.0, 0.0}, 0.0, id), domain_error);
}

TEST_CASE("AnomalyTable rejects degenerate build parameters") {
    std::vector<StationRecord> recs;
    recs.push_back(StationRecord{0.0, 140.0, 30.0, 1.0, 0.0, std::nullopt});
    AnomalyTable::GridSpec grid{135.0, 145.0, 25.0, 35.0, 1.0};
    CHECK_THROWS_AS(AnomalyTable::build({}, grid, 3600.0), domain_error);
    CHECK_THROWS_AS(AnomalyTable::build(recs, grid, 0.0), domain_error);
    AnomalyTable::GridSpec empty{145.0, 135.0, 25.0, 35.0, 1.0};
    CHECK_THROWS_AS(AnomalyTable::build(recs, empty, 3600.0), domain_error);
}

TEST_CASE("long-storm dataset bins into six hourly slices") {
    const std::vector<StationRecord> recs =
        parse_storm_csv(read_file(kSourceDir + "/data/storm_long.csv"));
    REQUIRE_FALSE(recs.empty());
    double t_max = 0.0;
    for (const StationRecord& r : recs) t_max = std::max(t_max, r.time_s);
    CHECK(t_max == doctest::Approx(21000.0));
    AnomalyTable::GridSpec grid{125.0, 175.0, 10.0, 55.0, 1.0};
    const AnomalyTable t = AnomalyTable::build(recs, grid, 3600.0);
    CHECK(t.time_slices() == 6);
    CHECK(t.dataset_duration_s() == doctest::Approx(6.0 * 3600.0));
}
