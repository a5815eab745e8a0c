#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "qjump/experiment.hpp"

using namespace qjump;
using std::size_t;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// structural validation of a summary against the published schema: every
// required key present with the right JSON type
void check_against_schema(const nlohmann::json& summary) {
    nlohmann::json schema =
        nlohmann::json::parse(slurp(std::string(QJUMP_SOURCE_DIR) + "/docs/summary.schema.json"));
    for (const auto& req : schema["required"]) {
        CAPTURE(req.get<std::string>());
        CHECK(summary.contains(req.get<std::string>()));
    }
    CHECK(summary["version"].is_string());
    CHECK(summary["scheme"].is_string());
    CHECK(summary["config"].is_object());
    for (const auto& req : schema["properties"]["config"]["required"])
        CHECK(summary["config"].contains(req.get<std::string>()));
    CHECK(summary["rates"].is_object());
    for (const auto& [k, v] : summary["rates"].items()) {
        (void)k;
        CHECK(v.contains("events"));
        CHECK(v.contains("rate"));
    }
    CHECK(summary["timestamp"].is_string());
}

}  // namespace

TEST_CASE("scheme name round trip") {
    for (auto s : {Scheme::tm, Scheme::dressed, Scheme::direct, Scheme::spectral1,
                   Scheme::spectral2, Scheme::two_state, Scheme::orthogonal, Scheme::conditioned})
        CHECK(scheme_from_string(to_string(s)) == s);
    CHECK_THROWS_AS(scheme_from_string("bogus"), ConfigError);
}

TEST_CASE("config validation: seed mandatory, trajectory count positive") {
    ExperimentConfig cfg;
    cfg.scheme = Scheme::direct;
    cfg.duration = 1.0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);  // no seed
    cfg.seed_set = true;
    cfg.trajectories = 0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg.trajectories = 1;
    CHECK_NOTHROW(validate(cfg));
}

TEST_CASE("config file parsing with overrides") {
    const char* path = "test_cfg.tmp";
    {
        std::ofstream out(path);
        out << "# comment\n";
        out << "scheme = two-state\n";
        out << "omega = 25 # inline comment\n";
        out << "duration = 12.5\n";
        out << "trajectories = 7\n";
        out << "seed = 99\n";
    }
    ExperimentConfig cfg = parse_config_file(path);
    CHECK(cfg.scheme == Scheme::two_state);
    CHECK(cfg.atom.omega == 25.0);
    CHECK(cfg.duration == 12.5);
    CHECK(cfg.trajectories == 7);
    CHECK(cfg.seed_set);
    CHECK(cfg.master_seed == 99);
    std::remove(path);
}

TEST_CASE("presets carry the captioned parameters") {
    ExperimentConfig f4;
    apply_preset(f4, "fig4");
    CHECK(f4.scheme == Scheme::spectral2);
    CHECK(f4.atom.omega == 50.0);
    CHECK(f4.filters.size() == 2);
    CHECK(f4.filters[0].hwhm == 8.0);
    CHECK(f4.filters[0].detuning == 50.0);
    CHECK(f4.filters[1].detuning == -50.0);

    ExperimentConfig f7;
    apply_preset(f7, "fig7");
    CHECK(f7.scheme == Scheme::orthogonal);
    CHECK(f7.atom.omega == 10.0);
    CHECK(f7.snapshot_interval == 0.015);
    CHECK(f7.duration == 15.0);

    ExperimentConfig f2;
    apply_preset(f2, "fig2");
    CHECK(f2.scheme == Scheme::spectral1);
    CHECK(f2.filters[0].detuning == 0.0);

    ExperimentConfig bad;
    CHECK_THROWS_AS(apply_preset(bad, "fig99"), ConfigError);
}

TEST_CASE("fig7 run: 1000 snapshot rows at the captioned spacing") {
    ExperimentConfig cfg;
    apply_preset(cfg, "fig7");
    cfg.master_seed = 7;
    cfg.seed_set = true;
    cfg.out_prefix = "fig7_test";
    ExperimentResult res = run_experiment(cfg);
    check_against_schema(res.summary);

    std::string csv = slurp("fig7_test.csv");
    size_t snaps = 0;
    std::istringstream lines(csv);
    std::string line;
    while (std::getline(lines, line))
        if (line.find(",snap,") != std::string::npos) ++snaps;
    CHECK(snaps == 1000);
    std::remove("fig7_test.csv");
    std::remove("fig7_test.json");
}

TEST_CASE("runs are reproducible modulo the timestamp") {
    ExperimentConfig cfg;
    cfg.scheme = Scheme::direct;
    cfg.atom = {1.0, 20.0};
    cfg.duration = 20.0;
    cfg.trajectories = 4;
    cfg.master_seed = 5;
    cfg.seed_set = true;
    cfg.out_prefix = "rep_a";
    run_experiment(cfg);
    cfg.out_prefix = "rep_b";
    run_experiment(cfg);
    CHECK(slurp("rep_a.csv") == slurp("rep_b.csv"));
    nlohmann::json ja = nlohmann::json::parse(slurp("rep_a.json"));
    nlohmann::json jb = nlohmann::json::parse(slurp("rep_b.json"));
    ja.erase("timestamp");
    jb.erase("timestamp");
    CHECK(ja == jb);
    for (const char* f : {"rep_a.csv", "rep_a.json", "rep_b.csv", "rep_b.json"}) std::remove(f);
}

TEST_CASE("classical run emits conditional rates near gamma/4") {
    ExperimentConfig cfg;
    cfg.scheme = Scheme::dressed;
    cfg.atom = {1.0, 50.0};
    cfg.duration = 20000.0;
    cfg.trajectories = 4;
    cfg.master_seed = 11;
    cfg.seed_set = true;
    ExperimentResult res = run_experiment(cfg);
    for (const char* s : {"state0", "state1"})
        for (const char* d : {"state0", "state1"}) {
            double r = res.extra["conditional_rates"][s][d].get<double>();
            CHECK(r == doctest::Approx(0.25).epsilon(0.05));
        }
    CHECK(res.alternation_violations == 0);
}

TEST_CASE("fit_power_law recovers a planted slope and coefficient") {
    std::vector<double> x = {0.1, 0.05, 0.025, 0.0125, 0.00625};
    std::vector<double> err, se;
    for (double xi : x) {
        err.push_back(2.7 * std::pow(xi, -1.5));
        se.push_back(0.01 * err.back());
    }
    PowerFit f = fit_power_law(x, err, se);
    CHECK(f.exponent == doctest::Approx(-1.5).epsilon(1e-9));
    CHECK(f.coefficient == doctest::Approx(2.7).epsilon(1e-9));
    CHECK(f.exponent_se < 0.02);
    CHECK(f.chi2_dof < 1e-12);
}

TEST_CASE("bloch locus: families converge to the dressed markers") {
    std::stringstream ss;
    emit_bloch_locus(ss);
    std::string line;
    std::getline(ss, line);
    CHECK(line == "family,branch,omega_over_gamma,phi,cos_theta,x,y");

    struct Row {
        std::string family, branch;
        double wog, phi, z, x, y;
    };
    std::vector<Row> rows;
    while (std::getline(ss, line)) {
        Row r;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream is(line);
        is >> r.family >> r.branch >> r.wog >> r.phi >> r.z >> r.x >> r.y;
        rows.push_back(r);
    }
    // last grid row of each family (largest omega) sits on the dressed marker
    auto last_of = [&](const std::string& fam, const std::string& br) {
        Row best{};
        best.wog = -1;
        for (const auto& r : rows)
            if (r.family == fam && r.branch == br && r.wog > best.wog) best = r;
        return best;
    };
    // dressed states: (x, y, z) = (+-1, 0, 0), phi = 0 or pi
    Row h = last_of("hl", "h");
    CHECK(std::abs(h.phi) < 1e-6);
    CHECK(std::abs(h.z) < 1e-6);
    Row l = last_of("hl", "l");
    CHECK(std::abs(std::abs(l.phi) - M_PI) < 1e-6);
    Row sp = last_of("two-state", "s+");
    CHECK(std::abs(std::abs(sp.phi) - M_PI) < 1e-6);  // psi_s^+ -> |->
    Row tp = last_of("orthogonal", "theta+");
    CHECK(std::abs(tp.phi) < 1e-6);
    CHECK(std::abs(tp.z) < 1e-6);

    // markers present: TM states on the equator at phi = +-pi/2,
    // the heavier TM state (phi1) on the +y side
    bool tm1 = false, tm2 = false, markers = 0;
    for (const auto& r : rows) {
        if (r.family == "tm" && r.branch == "phi1") {
            tm1 = true;
            CHECK(r.phi == doctest::Approx(M_PI / 2));
            CHECK(std::abs(r.z) < 1e-12);
        }
        if (r.family == "tm" && r.branch == "phi2") {
            tm2 = true;
            CHECK(r.phi == doctest::Approx(-M_PI / 2));
        }
        if (r.family.find("_marker") != std::string::npos) {
            CHECK(r.wog == 2.0);
            markers = true;
        }
    }
    CHECK(tm1);
    CHECK(tm2);
    CHECK(markers);
}

TEST_CASE("scaling report serializes with fit, points, analytic overlay") {
    // tiny synthetic check through the two-state scheme (fast, exact states)
    ScalingReport rep = run_scaling(Scheme::two_state, {5, 10, 20, 40}, 8, 400.0, 33, 0);
    CHECK(rep.points.size() == 4);
    nlohmann::json j = scaling_to_json(rep);
    CHECK(j.contains("fit"));
    CHECK(j["points"].size() == 4);
    // two-state errors are exact: the fitted exponent is 2 to high accuracy
    CHECK(rep.fit.exponent == doctest::Approx(2.0).epsilon(0.01));
    // Monte Carlo sits on the analytic curve within 3 standard errors
    for (const auto& pt : j["points"]) {
        double mc = pt["error"].get<double>();
        double se = pt["se"].get<double>();
        double analytic = pt["analytic"].get<double>();
        CHECK(std::abs(mc - analytic) <= std::max(3 * se, 1e-9));
    }
}

TEST_CASE("run_scaling rejects too-few abscissae") {
    CHECK_THROWS_AS(run_scaling(Scheme::two_state, {5, 10, 20}, 4, 50.0, 1, 0), ConfigError);
}
