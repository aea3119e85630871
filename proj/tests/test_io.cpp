#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <string>

#include "censaft/censaft.hpp"

using namespace censaft;

namespace {

std::string temp_path(const std::string& name) { return "/tmp/censaft_io_" + name; }

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

std::size_t parse_error_line(const std::string& path) {
    try {
        read_csv(path);
    } catch (const ParseError& e) {
        return e.line();
    }
    return static_cast<std::size_t>(-1);
}

}  // namespace

TEST_CASE("fixture files load with the expected shapes") {
    const SurvivalDataset rats = read_csv("data/rats.csv");
    CHECK(rats.n() == 10);
    CHECK(rats.p() == 0);

    const SurvivalDataset larynx = read_csv("data/larynx.csv");
    CHECK(larynx.n() == 90);
    CHECK(larynx.p() == 4);

    const SurvivalDataset male = read_csv("data/channing_male.csv");
    CHECK(male.n() == 97);
    CHECK(male.p() == 1);

    const SurvivalDataset female = read_csv("data/channing_female.csv");
    CHECK(female.n() == 365);
    CHECK(female.p() == 1);

    for (const SurvivalDataset* d : {&rats, &larynx, &male, &female}) {
        for (std::size_t i = 0; i < d->n(); ++i) {
            CHECK(d->times[i] > 0.0);
            CHECK((d->statuses[i] == 0 || d->statuses[i] == 1));
        }
    }
}

TEST_CASE("malformed tables report the offending line") {
    CHECK_THROWS_AS(read_csv("/tmp/censaft_io_does_not_exist.csv"), ParseError);
    CHECK(parse_error_line("/tmp/censaft_io_does_not_exist.csv") == 0);

    const std::string empty = temp_path("empty.csv");
    write_file(empty, "");
    CHECK(parse_error_line(empty) == 1);

    const std::string badheader = temp_path("badheader.csv");
    write_file(badheader, "duration,status\n1,1\n");
    CHECK(parse_error_line(badheader) == 1);

    const std::string badcov = temp_path("badcov.csv");
    write_file(badcov, "time,status,z1\n1,1,0.5\n");
    CHECK(parse_error_line(badcov) == 1);

    const std::string shortline = temp_path("short.csv");
    write_file(shortline, "time,status,x1\n1,1,0.5\n2,0\n");
    CHECK(parse_error_line(shortline) == 3);

    const std::string badnum = temp_path("badnum.csv");
    write_file(badnum, "time,status\n1,1\nfoo,0\n");
    CHECK(parse_error_line(badnum) == 3);

    const std::string badstatus = temp_path("badstatus.csv");
    write_file(badstatus, "time,status\n1,1\n2,2\n");
    CHECK(parse_error_line(badstatus) == 3);

    const std::string norows = temp_path("norows.csv");
    write_file(norows, "time,status\n");
    CHECK_THROWS_AS(read_csv(norows), ParseError);

    const std::string gap = temp_path("gap.csv");
    write_file(gap, "time,status\n1,1\n\n2,0\n");
    CHECK_THROWS_AS(read_csv(gap), ParseError);

    const std::string trailing = temp_path("trailing.csv");
    write_file(trailing, "time,status\n1,1\n2,0\n\n\n");
    CHECK_NOTHROW(read_csv(trailing));

    const std::string nonpositive = temp_path("nonpositive.csv");
    write_file(nonpositive, "time,status\n0,1\n2,0\n");
    CHECK_THROWS_AS(read_csv(nonpositive), InvalidDataset);
}

TEST_CASE("numeric formatting") {
    CHECK(format_sig(0.5) == "0.5");
    CHECK(format_sig(1.0 / 3.0) == "0.333333");
    CHECK(format_sig(1234567.0) == "1.23457e+06");
    CHECK(format_sig(-2.0, 3) == "-2");

    for (double v : {3.141592653589793, 1.0 / 3.0, 1.6305379767381771e-17}) {
        const std::string s = format_full(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
}

TEST_CASE("method names round trip") {
    for (ImputationMethod m :
         {ImputationMethod::Efron, ImputationMethod::CondMean,
          ImputationMethod::CondMedian, ImputationMethod::ResampCondMean,
          ImputationMethod::ResampCondMedian, ImputationMethod::PredDiff}) {
        CHECK(parse_method(method_name(m)) == m);
    }
    CHECK(method_name(ImputationMethod::Efron) == "efron");
    CHECK(method_name(ImputationMethod::PredDiff) == "pdiff");
    CHECK_THROWS_AS(parse_method("bogus"), ConfigError);
    try {
        parse_method("bogus");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "method");
    }
}

TEST_CASE("study report serialization") {
    StudyReport report;
    report.replications = 7;
    report.mean_censoring_rate = 31.25;
    report.censoring_a = 2.5;
    MethodStats ms;
    ms.method = ImputationMethod::CondMedian;
    ms.bias = {0.125, -0.5};
    ms.variance = {1.5, 2.0};
    ms.mse = {1.515625, 2.25};
    ms.successes = 6;
    ms.failures = 1;
    report.methods.push_back(ms);

    const std::string csv = study_report_csv(report);
    CHECK(csv.find("method,coefficient,statistic,value\n") == 0);
    CHECK(csv.find(",,replications,7\n") != std::string::npos);
    CHECK(csv.find(",,mean_censoring_rate,31.25\n") != std::string::npos);
    CHECK(csv.find("cmedian,,successes,6\n") != std::string::npos);
    CHECK(csv.find("cmedian,,failures,1\n") != std::string::npos);
    CHECK(csv.find("cmedian,beta1,bias,0.125\n") != std::string::npos);
    CHECK(csv.find("cmedian,beta2,mse,2.25\n") != std::string::npos);

    const nlohmann::json j = study_report_json(report);
    CHECK(j["replications"] == 7);
    CHECK(j["censoring_a"] == 2.5);
    REQUIRE(j["methods"].size() == 1);
    CHECK(j["methods"][0]["method"] == "cmedian");
    CHECK(j["methods"][0]["bias"][0] == 0.125);
    CHECK(j["methods"][0]["variance"][1] == 2.0);
    CHECK(j["methods"][0]["failures"] == 1);

    // round trip through text
    const nlohmann::json back = nlohmann::json::parse(j.dump(2));
    CHECK(back == j);
}

TEST_CASE("study specifications parse with defaults and overrides") {
    const std::string good = temp_path("spec_good.json");
    write_file(good, R"({"n": 40, "p": 2, "beta": [1.0, -0.5],
                         "target_censoring": 30, "replications": 10,
                         "seed": 17, "methods": ["efron", "pdiff"],
                         "lambda2": 0.05})");
    const StudySpec spec = read_study_spec(good);
    CHECK(spec.config.n == 40);
    CHECK(spec.config.p == 2);
    CHECK(spec.config.beta == Vector{1.0, -0.5});
    CHECK(spec.config.target_censoring == 30.0);
    CHECK(spec.config.replications == 10);
    CHECK(spec.config.seed == 17);
    REQUIRE(spec.methods.size() == 2);
    CHECK(spec.methods[0] == ImputationMethod::Efron);
    CHECK(spec.methods[1] == ImputationMethod::PredDiff);
    REQUIRE(spec.lambda2.has_value());
    CHECK(*spec.lambda2 == 0.05);

    const std::string minimal = temp_path("spec_minimal.json");
    write_file(minimal, R"({"n": 20, "p": 1, "beta": [2.0]})");
    const StudySpec m = read_study_spec(minimal);
    CHECK(m.methods.size() == 6);  // all schemes by default
    CHECK_FALSE(m.lambda2.has_value());
    CHECK(m.config.sigma == 1.0);
}

TEST_CASE("study specification errors carry the key") {
    const std::string unknown = temp_path("spec_unknown.json");
    write_file(unknown, R"({"n": 20, "p": 1, "beta": [2.0], "foo": 1})");
    try {
        read_study_spec(unknown);
        FAIL("expected a configuration error");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "foo");
    }

    const std::string badbeta = temp_path("spec_badbeta.json");
    write_file(badbeta, R"({"n": 20, "p": 1, "beta": "x"})");
    try {
        read_study_spec(badbeta);
        FAIL("expected a configuration error");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "beta");
    }

    const std::string missing = temp_path("spec_missing.json");
    write_file(missing, R"({"p": 1, "beta": [2.0]})");
    try {
        read_study_spec(missing);
        FAIL("expected a configuration error");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "n");
    }

    const std::string mismatch = temp_path("spec_mismatch.json");
    write_file(mismatch, R"({"n": 20, "p": 2, "beta": [2.0]})");
    CHECK_THROWS_AS(read_study_spec(mismatch), ConfigError);

    const std::string badjson = temp_path("spec_badjson.json");
    write_file(badjson, "{ not json");
    CHECK_THROWS_AS(read_study_spec(badjson), ParseError);

    CHECK_THROWS_AS(read_study_spec("/tmp/censaft_io_no_such_spec.json"),
                    ParseError);

    const std::string badmethod = temp_path("spec_badmethod.json");
    write_file(badmethod,
               R"({"n": 20, "p": 1, "beta": [2.0], "methods": ["nope"]})");
    CHECK_THROWS_AS(read_study_spec(badmethod), ConfigError);
}

TEST_CASE("the bundled study configuration is valid") {
    const StudySpec spec = read_study_spec("configs/table2.cfg");
    CHECK(spec.config.n == 100);
    CHECK(spec.config.p == 5);
    CHECK(spec.config.beta == Vector{2.0, 3.0, 4.0, 5.0, 6.0});
    CHECK(spec.config.target_censoring == 70.0);
    CHECK(spec.config.replications == 200);
    CHECK(spec.methods.size() == 6);
}
