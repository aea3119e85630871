#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "censaft/censaft.hpp"

namespace {

using censaft::format_sig;

void write_text(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw censaft::Error("cannot write file '" + path + "'");
    out << content;
}

std::string km_table(const censaft::OrderedDataset& data, bool tail_correction) {
    const censaft::KmCurve curve = censaft::km_estimate(data, tail_correction);
    std::string out = "t,survival,jump\n";
    std::size_t atom = 0;
    for (std::size_t i = 0; i < data.n(); ++i) {
        if (i > 0 && data.times[i] == data.times[i - 1]) continue;
        double jump = 0.0;
        if (atom < curve.event_times.size() &&
            curve.event_times[atom] == data.times[i]) {
            jump = curve.jumps[atom];
            ++atom;
        }
        out += format_sig(data.times[i]) + "," +
               format_sig(censaft::km_survival_at(curve, data.times[i])) + "," +
               format_sig(jump) + "\n";
    }
    return out;
}

std::string weights_table(const censaft::OrderedDataset& data, bool tail_correction) {
    const censaft::StuteWeights sw = censaft::stute_weights(data, tail_correction);
    std::string out = "time,status,weight\n";
    for (std::size_t i = 0; i < data.n(); ++i) {
        out += format_sig(data.times[i]) + "," + std::to_string(data.statuses[i]) +
               "," + format_sig(sw.weights[i]) + "\n";
    }
    return out;
}

std::string fit_text(const censaft::ImputationResult& res, std::size_t n,
                     std::size_t p) {
    std::string out;
    out += "method: " + censaft::method_name(res.method) + "\n";
    out += "n: " + std::to_string(n) + "\n";
    out += "p: " + std::to_string(p) + "\n";
    out += "lambda2: " + format_sig(res.fit.lambda2) + "\n";
    out += "coefficients:\n";
    for (std::size_t j = 0; j < res.fit.beta.size(); ++j) {
        out += "  x" + std::to_string(j + 1) + ": " + format_sig(res.fit.beta[j]) +
               "\n";
    }
    out += "intercept: " + format_sig(res.fit.intercept) + "\n";
    if (res.imputed_log_time) {
        out += "imputed_log_time: " + format_sig(*res.imputed_log_time) + "\n";
        out += "imputed_time: " + format_sig(std::exp(*res.imputed_log_time)) + "\n";
        out += "tau: " + format_sig(*res.tau) + "\n";
    }
    if (res.empty_tail) out += "flag: empty_tail\n";
    if (res.clamped_nu) out += "flag: clamped_nu\n";
    out += "kkt_residual: " + format_sig(res.fit.kkt_residual) + "\n";
    return out;
}

nlohmann::json fit_json(const censaft::ImputationResult& res, std::size_t n,
                        std::size_t p) {
    nlohmann::json j;
    j["method"] = censaft::method_name(res.method);
    j["n"] = n;
    j["p"] = p;
    j["lambda2"] = res.fit.lambda2;
    j["coefficients"] = res.fit.beta;
    j["intercept"] = res.fit.intercept;
    if (res.imputed_log_time) {
        j["imputed_log_time"] = *res.imputed_log_time;
        j["imputed_time"] = std::exp(*res.imputed_log_time);
        j["tau"] = *res.tau;
    }
    j["empty_tail"] = res.empty_tail;
    j["clamped_nu"] = res.clamped_nu;
    j["kkt_residual"] = res.fit.kkt_residual;
    return j;
}

int run(int argc, char** argv) {
    CLI::App app{"Accelerated failure time estimation under right censoring"};
    app.require_subcommand(1);

    std::string file, out_path, method_name_arg = "efron";
    bool tail_correction = false, as_json = false;
    std::optional<double> lambda2;
    std::uint64_t seed = 0;
    double psi = 1.0;
    std::string tt_method = "iterative";
    std::string config_path, out_prefix = "study";
    std::optional<std::size_t> reps_override;
    std::optional<std::uint64_t> seed_override;

    CLI::App* km = app.add_subcommand("km", "Product-limit survival curve");
    km->add_option("file", file)->required();
    km->add_flag("--tail-correction", tail_correction);
    km->add_option("--out", out_path);

    CLI::App* weights = app.add_subcommand("weights", "Least-squares observation weights");
    weights->add_option("file", file)->required();
    weights->add_flag("--tail-correction", tail_correction);
    weights->add_option("--out", out_path);

    CLI::App* fit = app.add_subcommand("fit", "Penalized weighted least squares fit");
    fit->add_option("file", file)->required();
    fit->add_option("--method", method_name_arg)->required();
    fit->add_option("--lambda2", lambda2);
    fit->add_option("--seed", seed);
    fit->add_flag("--json", as_json);
    fit->add_option("--out", out_path);

    CLI::App* tailties = app.add_subcommand("tailties", "Impute tied censored maxima");
    tailties->add_option("file", file)->required();
    tailties->add_option("--method", tt_method)
        ->check(CLI::IsMember({"iterative", "extrapolate"}));
    tailties->add_option("--psi", psi);
    tailties->add_flag("--json", as_json);
    tailties->add_option("--out", out_path);

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo study");
    simulate->add_option("--config", config_path)->required();
    simulate->add_option("--reps", reps_override);
    simulate->add_option("--seed", seed_override);
    simulate->add_option("--out", out_prefix);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    if (km->parsed() || weights->parsed()) {
        const censaft::OrderedDataset data =
            censaft::order_dataset(censaft::read_csv(file));
        write_text(out_path, km->parsed() ? km_table(data, tail_correction)
                                          : weights_table(data, tail_correction));
        return 0;
    }

    if (fit->parsed()) {
        const censaft::ImputationMethod method = censaft::parse_method(method_name_arg);
        const censaft::SurvivalDataset ds = censaft::read_csv(file);
        if ((method == censaft::ImputationMethod::ResampCondMean ||
             method == censaft::ImputationMethod::ResampCondMedian) &&
            ds.p() < 2) {
            std::cerr << "resampling methods need at least two covariates\n";
            return 5;
        }
        censaft::ImputeOptions opts;
        opts.lambda2 = lambda2;
        opts.seed = seed;
        const censaft::ImputationResult res =
            censaft::run_pipeline(censaft::order_dataset(ds), method, opts);
        write_text(out_path, as_json ? fit_json(res, ds.n(), ds.p()).dump(2) + "\n"
                                     : fit_text(res, ds.n(), ds.p()));
        return 0;
    }

    if (tailties->parsed()) {
        const censaft::OrderedDataset data =
            censaft::order_dataset(censaft::read_csv(file));
        censaft::Vector imputed;
        double r_squared = 0.0;
        if (tt_method == "iterative") {
            for (double lt : censaft::tail_ties_iterative(data)) {
                imputed.push_back(std::exp(lt));
            }
        } else {
            const censaft::Extrapolation ex = censaft::tail_ties_extrapolate(data, psi);
            imputed = ex.imputed;
            r_squared = ex.r_squared;
        }
        if (as_json) {
            nlohmann::json j;
            j["method"] = tt_method;
            j["ties"] = imputed.size();
            j["imputed_times"] = imputed;
            if (tt_method == "extrapolate") j["r_squared"] = r_squared;
            write_text(out_path, j.dump(2) + "\n");
        } else {
            std::string out = "method: " + tt_method + "\n";
            out += "ties: " + std::to_string(imputed.size()) + "\n";
            if (tt_method == "extrapolate") {
                out += "r_squared: " + format_sig(r_squared) + "\n";
            }
            out += "k,imputed_time\n";
            for (std::size_t k = 0; k < imputed.size(); ++k) {
                out += std::to_string(k + 1) + "," + format_sig(imputed[k]) + "\n";
            }
            write_text(out_path, out);
        }
        return 0;
    }

    censaft::StudySpec spec = censaft::read_study_spec(config_path);
    if (reps_override) spec.config.replications = *reps_override;
    if (seed_override) spec.config.seed = *seed_override;
    const censaft::StudyReport report =
        censaft::run_study(spec.config, spec.methods, spec.lambda2);
    write_text(out_prefix + ".csv", censaft::study_report_csv(report));
    write_text(out_prefix + ".json", censaft::study_report_json(report).dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const censaft::ParseError& e) {
        if (e.line() > 0) {
            std::cerr << "parse error (line " << e.line() << "): " << e.what() << "\n";
        } else {
            std::cerr << "parse error: " << e.what() << "\n";
        }
        return 2;
    } catch (const censaft::ConfigError& e) {
        std::cerr << "configuration error (" << e.field() << "): " << e.what() << "\n";
        return 2;
    } catch (const censaft::LargestNotCensored& e) {
        std::cerr << e.what() << "\n";
        return 4;
    } catch (const censaft::Error& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 3;
    }
}
