#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "censaft/data.hpp"
#include "censaft/errors.hpp"
#include "censaft/impute.hpp"
#include "censaft/simulate.hpp"

namespace censaft {

inline std::string format_sig(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

inline std::string format_full(double v) { return format_sig(v, 17); }

inline std::string method_name(ImputationMethod m) {
    switch (m) {
        case ImputationMethod::Efron: return "efron";
        case ImputationMethod::CondMean: return "cmean";
        case ImputationMethod::CondMedian: return "cmedian";
        case ImputationMethod::ResampCondMean: return "rmean";
        case ImputationMethod::ResampCondMedian: return "rmedian";
        case ImputationMethod::PredDiff: return "pdiff";
    }
    throw InvalidDataset("unknown estimation method");
}

inline ImputationMethod parse_method(const std::string& name) {
    if (name == "efron") return ImputationMethod::Efron;
    if (name == "cmean") return ImputationMethod::CondMean;
    if (name == "cmedian") return ImputationMethod::CondMedian;
    if (name == "rmean") return ImputationMethod::ResampCondMean;
    if (name == "rmedian") return ImputationMethod::ResampCondMedian;
    if (name == "pdiff") return ImputationMethod::PredDiff;
    throw ConfigError("unknown estimation method '" + name + "'", "method");
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

inline double parse_number(const std::string& cell, std::size_t line_no) {
    if (cell.empty()) throw ParseError("empty cell", line_no);
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size()) {
        throw ParseError("cannot parse number '" + cell + "'", line_no);
    }
    return v;
}

}  // namespace detail

// Survival table with mandatory header `time,status,x1,...,xp`; p may be 0.
inline SurvivalDataset read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file '" + path + "'", 0);

    std::string line;
    if (!std::getline(in, line)) throw ParseError("file is empty", 1);
    const std::vector<std::string> header = detail::split_csv_line(line);
    if (header.size() < 2 || header[0] != "time" || header[1] != "status") {
        throw ParseError("header must start with 'time,status'", 1);
    }
    const std::size_t p = header.size() - 2;
    for (std::size_t j = 0; j < p; ++j) {
        if (header[j + 2] != "x" + std::to_string(j + 1)) {
            throw ParseError("covariate columns must be named x1..xp in order", 1);
        }
    }

    std::vector<double> times;
    std::vector<int> statuses;
    std::vector<Vector> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) {
            std::string rest;
            if (std::getline(in, rest) && !detail::trim(rest).empty()) {
                throw ParseError("blank line inside the table", line_no);
            }
            break;
        }
        const std::vector<std::string> cells = detail::split_csv_line(line);
        if (cells.size() != p + 2) {
            throw ParseError("expected " + std::to_string(p + 2) + " cells, found " +
                                 std::to_string(cells.size()),
                             line_no);
        }
        times.push_back(detail::parse_number(cells[0], line_no));
        const double st = detail::parse_number(cells[1], line_no);
        if (st != 0.0 && st != 1.0) {
            throw ParseError("status must be 0 or 1", line_no);
        }
        statuses.push_back(static_cast<int>(st));
        Vector row(p);
        for (std::size_t j = 0; j < p; ++j) {
            row[j] = detail::parse_number(cells[j + 2], line_no);
        }
        rows.push_back(std::move(row));
    }
    if (times.empty()) throw ParseError("no data rows", line_no);

    Matrix x(rows.size(), p);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < p; ++j) x(i, j) = rows[i][j];
    }
    return make_dataset(std::move(times), std::move(statuses), std::move(x));
}

inline std::string study_report_csv(const StudyReport& report) {
    std::string out = "method,coefficient,statistic,value\n";
    out += ",,replications," + std::to_string(report.replications) + "\n";
    out += ",,mean_censoring_rate," + format_full(report.mean_censoring_rate) + "\n";
    out += ",,censoring_a," + format_full(report.censoring_a) + "\n";
    for (const MethodStats& ms : report.methods) {
        const std::string name = method_name(ms.method);
        out += name + ",,successes," + std::to_string(ms.successes) + "\n";
        out += name + ",,failures," + std::to_string(ms.failures) + "\n";
        for (std::size_t j = 0; j < ms.bias.size(); ++j) {
            const std::string coef = "beta" + std::to_string(j + 1);
            out += name + "," + coef + ",bias," + format_full(ms.bias[j]) + "\n";
            out += name + "," + coef + ",variance," + format_full(ms.variance[j]) + "\n";
            out += name + "," + coef + ",mse," + format_full(ms.mse[j]) + "\n";
        }
    }
    return out;
}

inline nlohmann::json study_report_json(const StudyReport& report) {
    nlohmann::json j;
    j["replications"] = report.replications;
    j["mean_censoring_rate"] = report.mean_censoring_rate;
    j["censoring_a"] = report.censoring_a;
    j["methods"] = nlohmann::json::array();
    for (const MethodStats& ms : report.methods) {
        nlohmann::json m;
        m["method"] = method_name(ms.method);
        m["successes"] = ms.successes;
        m["failures"] = ms.failures;
        m["bias"] = ms.bias;
        m["variance"] = ms.variance;
        m["mse"] = ms.mse;
        j["methods"].push_back(std::move(m));
    }
    return j;
}

struct StudySpec {
    SimConfig config;
    std::vector<ImputationMethod> methods;
    std::optional<double> lambda2;
};

// Flat JSON keys mirror the SimConfig fields; `methods` and `lambda2` extend
// them for the command line.
inline StudySpec read_study_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file '" + path + "'", 0);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(e.what(), 0);
    }
    if (!j.is_object()) throw ParseError("configuration must be a JSON object", 0);

    StudySpec spec;
    spec.methods = {ImputationMethod::Efron,          ImputationMethod::CondMean,
                    ImputationMethod::CondMedian,     ImputationMethod::ResampCondMean,
                    ImputationMethod::ResampCondMedian, ImputationMethod::PredDiff};

    for (const auto& item : j.items()) {
        const std::string& key = item.key();
        const nlohmann::json& v = item.value();
        try {
            if (key == "n") spec.config.n = v.get<std::size_t>();
            else if (key == "p") spec.config.p = v.get<std::size_t>();
            else if (key == "beta") spec.config.beta = v.get<Vector>();
            else if (key == "sigma") spec.config.sigma = v.get<double>();
            else if (key == "rho") spec.config.rho = v.get<double>();
            else if (key == "target_censoring") spec.config.target_censoring = v.get<double>();
            else if (key == "replications") spec.config.replications = v.get<std::size_t>();
            else if (key == "seed") spec.config.seed = v.get<std::uint64_t>();
            else if (key == "alpha") spec.config.alpha = v.get<double>();
            else if (key == "pilot_size") spec.config.pilot_size = v.get<std::size_t>();
            else if (key == "calibration_tolerance") spec.config.calibration_tolerance = v.get<double>();
            else if (key == "lambda2") spec.lambda2 = v.get<double>();
            else if (key == "methods") {
                spec.methods.clear();
                for (const auto& name : v) {
                    spec.methods.push_back(parse_method(name.get<std::string>()));
                }
            } else {
                throw ConfigError("unknown configuration key", key);
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(e.what(), key);
        }
    }
    if (!j.contains("n")) throw ConfigError("missing required key", "n");
    if (!j.contains("p")) throw ConfigError("missing required key", "p");
    if (!j.contains("beta")) throw ConfigError("missing required key", "beta");
    validate_config(spec.config);
    return spec;
}

}  // namespace censaft
