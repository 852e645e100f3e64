#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "normgam/correction.hpp"
#include "normgam/estimation.hpp"
#include "normgam/evaluation.hpp"
#include "normgam/io.hpp"
#include "normgam/negctrl.hpp"
#include "normgam/parallel.hpp"
#include "normgam/simulation.hpp"
#include "normgam/stats.hpp"

namespace fs = std::filesystem;
using namespace normgam;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitWarn = 1;   // non-convergence / statistical warning
constexpr int kExitInput = 2;  // malformed input or arguments

GridAccuracy accuracy_from_string(const std::string& name) {
    if (name == "likelihood") return GridAccuracy::likelihood;
    if (name == "reference") return GridAccuracy::reference;
    throw std::invalid_argument("unknown accuracy profile: " + name);
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const auto comma = csv.find(',', start);
        if (comma == std::string::npos) {
            if (start < csv.size()) out.push_back(csv.substr(start));
            break;
        }
        if (comma > start) out.push_back(csv.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

int run_fit(const std::string& array_path, const std::string& model,
            const std::string& out_path, const std::string& accuracy) {
    const ArrayFile file = read_array_file(array_path);
    FitRecord rec;
    rec.model = model;
    bool converged = true;
    if (model == "normgam") {
        FitOptions opts;
        opts.accuracy = accuracy_from_string(accuracy);
        const NormgamFit fit = normgam_mle(file.probes, opts);
        rec.mu = fit.params.mu;
        rec.sigma = fit.params.sigma;
        rec.shape = fit.params.shape;
        rec.scale = fit.params.scale;
        rec.loglik = fit.loglik;
        rec.iterations = fit.iterations;
        converged = fit.converged;
    } else if (model == "normexp-mle") {
        const NormexpFit fit = normexp_mle(file.probes);
        rec.mu = fit.params.mu;
        rec.sigma = fit.params.sigma;
        rec.scale = fit.params.alpha;
        rec.loglik = fit.loglik;
        rec.iterations = fit.iterations;
        converged = fit.converged;
    } else if (model == "normexp-np") {
        const NormexpParams p = normexp_np(file.probes);
        rec.mu = p.mu;
        rec.sigma = p.sigma;
        rec.scale = p.alpha;
        rec.loglik = loglik_normexp(p, file.probes);
    } else if (model == "normexp-rma") {
        const NormexpParams p = normexp_rma(file.probes.regular);
        rec.mu = p.mu;
        rec.sigma = p.sigma;
        rec.scale = p.alpha;
        if (!file.probes.negative.empty()) rec.loglik = loglik_normexp(p, file.probes);
    } else {
        throw std::invalid_argument("unknown model: " + model);
    }
    rec.converged = converged;
    write_fit_record(out_path, rec);
    if (!converged) {
        std::cerr << "warning: optimizer did not converge\n";
        return kExitWarn;
    }
    return kExitOk;
}

int run_correct(const std::string& array_path, const std::string& params_path,
                bool subtract, const std::string& expect_model,
                const std::string& out_path) {
    const ArrayFile file = read_array_file(array_path);
    std::vector<double> corrected;
    std::string method_name;
    if (subtract) {
        corrected = correct_subtract(file.probes.regular, file.probes.negative);
        method_name = "subtract";
    } else {
        const FitRecord rec = read_fit_record(params_path);
        if (!expect_model.empty() && rec.model != expect_model)
            throw std::invalid_argument("params file model '" + rec.model +
                                        "' does not match requested '" + expect_model + "'");
        method_name = rec.model;
        if (rec.model == "normgam") {
            const NormalGammaParams p{rec.mu, rec.sigma, rec.shape, rec.scale};
            corrected = correct_normgam(file.probes.regular, p);
        } else {
            const NormexpParams p{rec.mu, rec.sigma, rec.scale};
            corrected.resize(file.probes.regular.size());
            for (std::size_t i = 0; i < corrected.size(); ++i)
                corrected[i] = correct_normexp(file.probes.regular[i], p);
        }
    }
    write_column(out_path, corrected, file.regular_ids,
                 {"background-corrected intensities, method=" + method_name});
    return kExitOk;
}

int run_simulate(const SimulationSpec& spec, const std::string& pool_path,
                 const std::string& out_dir) {
    SimulationSpec s = spec;
    if (!pool_path.empty()) s.noise_pool = read_column(pool_path);
    const SimulatedBatch batch = simulate(s);
    write_batch(out_dir, batch);
    return kExitOk;
}

int run_infer_neg(const std::string& table_path, std::size_t n_neg,
                  const std::string& out_path) {
    const DetectionTable table = read_detection_table(table_path, n_neg);
    const InferredNegatives inferred = infer_negatives(table);
    write_column(out_path, inferred.values);
    if (inferred.count_adjusted) {
        std::cerr << "warning: inferred counts adjusted to reach n_neg\n";
        return kExitWarn;
    }
    return kExitOk;
}

int run_density(const NormalGammaParams& p, const std::string& accuracy,
                const std::string& out_path) {
    const DensityGrid grid(p, accuracy_from_string(accuracy));
    write_xy(out_path, grid.abscissae(), std::vector<double>(grid.values().begin(),
                                                             grid.values().end()),
             "normal-gamma density grid");
    return kExitOk;
}

struct MethodFits {
    CorrectionTag tag;
    std::vector<CorrectionMethod> per_array;  // one method payload per array
    bool all_converged = true;
};

MethodFits fit_method(CorrectionTag tag, const BatchOnDisk& batch,
                      const NormalGammaParams& truth) {
    MethodFits out;
    out.tag = tag;
    const std::size_t n = batch.arrays.size();
    out.per_array.resize(n);
    std::vector<char> converged(n, 1);
    parallel_for(n, [&](std::size_t i) {
        const ProbeArray& arr = batch.arrays[i];
        CorrectionMethod m;
        m.tag = tag;
        switch (tag) {
            case CorrectionTag::ng_true:
                m.payload = truth;
                break;
            case CorrectionTag::ng_mle: {
                const NormgamFit fit = normgam_mle(arr);
                m.payload = fit.params;
                converged[i] = fit.converged ? 1 : 0;
                break;
            }
            case CorrectionTag::nexp_mle: {
                const NormexpFit fit = normexp_mle(arr);
                m.payload = fit.params;
                converged[i] = fit.converged ? 1 : 0;
                break;
            }
            case CorrectionTag::nexp_np:
                m.payload = normexp_np(arr);
                break;
            case CorrectionTag::nexp_rma:
                m.payload = normexp_rma(arr.regular);
                break;
            case CorrectionTag::subtract:
                m.payload = median(arr.negative);
                break;
        }
        out.per_array[i] = m;
    });
    out.all_converged = std::all_of(converged.begin(), converged.end(),
                                    [](char c) { return c != 0; });
    return out;
}

int run_evaluate(const std::string& batch_dir, const std::string& methods_csv,
                 const std::string& offsets_csv, const std::string& out_path,
                 const std::string& ad_out, const std::string& oc_out,
                 const std::string& labels_path, const std::string& groups_spec) {
    const BatchOnDisk batch = read_batch(batch_dir);
    if (batch.signals.empty())
        throw std::runtime_error("batch has no signal files (truth required for MAD)");
    const NormalGammaParams truth{
        std::stod(batch.manifest.at("mu")), std::stod(batch.manifest.at("sigma")),
        std::stod(batch.manifest.at("k")), std::stod(batch.manifest.at("theta"))};
    const std::string set_name = batch.manifest.count("set") ? batch.manifest.at("set") : "-";

    std::vector<CorrectionTag> tags;
    for (const auto& name : split_list(methods_csv))
        tags.push_back(correction_tag_from_string(name));
    std::vector<double> offsets;
    for (const auto& o : split_list(offsets_csv)) offsets.push_back(std::stod(o));
    if (offsets.empty()) offsets.push_back(0.0);

    std::optional<std::vector<double>> labels;
    if (!labels_path.empty()) labels = read_column(labels_path);

    const std::size_t n_arrays = batch.arrays.size();
    std::vector<std::size_t> group_a, group_b;
    if (!groups_spec.empty()) {
        // "a1-a2,b1-b2" with 1-based inclusive array ranges
        const auto parts = split_list(groups_spec);
        if (parts.size() != 2)
            throw std::invalid_argument("groups must be two ranges like 1-10,11-20");
        auto parse_range = [&](const std::string& r, std::vector<std::size_t>& out) {
            const auto dash = r.find('-');
            if (dash == std::string::npos)
                throw std::invalid_argument("bad group range: " + r);
            const auto lo = std::stoul(r.substr(0, dash));
            const auto hi = std::stoul(r.substr(dash + 1));
            if (lo < 1 || hi > n_arrays || lo > hi)
                throw std::invalid_argument("group range outside 1..n_arrays: " + r);
            for (auto i = lo; i <= hi; ++i) out.push_back(i - 1);
        };
        parse_range(parts[0], group_a);
        parse_range(parts[1], group_b);
    } else if (n_arrays >= 4) {
        for (std::size_t i = 0; i < n_arrays / 2; ++i) group_a.push_back(i);
        for (std::size_t i = n_arrays / 2; i < n_arrays; ++i) group_b.push_back(i);
    }

    // MAD(S^(0)) is the excess-risk reference whether or not ng-true was
    // requested for reporting.
    const MethodFits reference = fit_method(CorrectionTag::ng_true, batch, truth);
    bool warn = false;

    std::vector<EvalRow> rows;
    std::map<CorrectionTag, double> mad_raw_by_tag;
    double reference_mad = 0.0;

    auto evaluate_method = [&](const MethodFits& fits) {
        std::vector<std::vector<double>> corrected(n_arrays);
        parallel_for(n_arrays, [&](std::size_t i) {
            corrected[i] =
                apply_correction(fits.per_array[i], batch.arrays[i].regular);
        });

        double mad_raw = 0.0, madlog = 0.0;
        bool log_ok = fits.tag != CorrectionTag::subtract;
        for (std::size_t i = 0; i < n_arrays; ++i) {
            const auto& sig = batch.signal_for(i);
            mad_raw += mad(corrected[i], sig);
            if (log_ok) madlog += mad_log(corrected[i], sig);
        }
        mad_raw /= static_cast<double>(n_arrays);
        madlog /= static_cast<double>(n_arrays);
        mad_raw_by_tag[fits.tag] = mad_raw;
        if (fits.tag == CorrectionTag::ng_true) reference_mad = mad_raw;

        const std::string name = to_string(fits.tag);
        rows.push_back({"mad", name, set_name, "raw", mad_raw});
        if (log_ok) rows.push_back({"mad", name, set_name, "log", madlog});
        return corrected;
    };

    std::map<CorrectionTag, std::vector<std::vector<double>>> corrected_by_tag;
    corrected_by_tag[CorrectionTag::ng_true] = evaluate_method(reference);
    for (CorrectionTag tag : tags) {
        if (tag == CorrectionTag::ng_true) continue;  // evaluated as the reference
        const MethodFits fits = fit_method(tag, batch, truth);
        warn = warn || !fits.all_converged;
        corrected_by_tag[tag] = evaluate_method(fits);
    }

    for (CorrectionTag tag : tags)
        rows.push_back({"excess_risk", to_string(tag), set_name, "raw",
                        mad_raw_by_tag.at(tag) / reference_mad});

    std::ofstream ad_stream, oc_stream;
    if (!ad_out.empty()) {
        ad_stream.open(ad_out);
        ad_stream << "# log_signal\tmethod\tad\n";
    }
    if (!oc_out.empty()) {
        oc_stream.open(oc_out);
        oc_stream << "# level\tmethod\tmean_intensity\treplicate_sd\toffset\n";
    }

    for (CorrectionTag tag : tags) {
        const auto& corrected = corrected_by_tag.at(tag);
        const std::string name = to_string(tag);

        if (!ad_out.empty() && batch.shared_signal) {
            const auto profile = ad_profile(corrected, batch.signals.front(), false);
            // Decile-aggregated to keep the file small and the trend readable.
            const std::size_t n_pts = profile.size();
            for (int d = 0; d < 10 && n_pts >= 10; ++d) {
                double x = 0.0, v = 0.0;
                const std::size_t lo = n_pts * d / 10, hi = n_pts * (d + 1) / 10;
                for (std::size_t i = lo; i < hi; ++i) {
                    x += profile[i].log_signal;
                    v += profile[i].ad;
                }
                const double cnt = static_cast<double>(hi - lo);
                ad_stream << format_double(x / cnt) << '\t' << name << '\t'
                          << format_double(v / cnt) << '\n';
            }
        }

        for (double offset : offsets) {
            if (tag == CorrectionTag::subtract) continue;  // zeros cannot be logged at offset 0
            auto normalized = quantile_normalize(corrected);
            std::vector<std::vector<double>> logged(n_arrays);
            for (std::size_t i = 0; i < n_arrays; ++i)
                logged[i] = apply_offset_log(normalized[i], offset);

            if (!oc_out.empty() && batch.shared_signal) {
                std::vector<double> log_truth =
                    apply_offset_log(batch.signals.front(), offset);
                for (const OcRow& r : operating_characteristics(logged, log_truth)) {
                    oc_stream << format_double(r.level) << '\t' << name << '\t'
                              << format_double(r.mean_intensity) << '\t'
                              << format_double(r.replicate_sd) << '\t'
                              << format_double(offset) << '\n';
                }
            }

            if (labels && !group_a.empty() && !group_b.empty()) {
                const std::size_t n_probes = batch.arrays.front().regular.size();
                if (labels->size() != n_probes)
                    throw std::invalid_argument("labels length does not match probe count");
                std::vector<double> scores(n_probes);
                std::vector<double> va(group_a.size()), vb(group_b.size());
                for (std::size_t j = 0; j < n_probes; ++j) {
                    for (std::size_t g = 0; g < group_a.size(); ++g)
                        va[g] = logged[group_a[g]][j];
                    for (std::size_t g = 0; g < group_b.size(); ++g)
                        vb[g] = logged[group_b[g]][j];
                    scores[j] = std::abs(welch_t(va, vb));
                }
                std::vector<int> lab(n_probes);
                for (std::size_t j = 0; j < n_probes; ++j) lab[j] = (*labels)[j] != 0.0;
                rows.push_back({"auc_offset_" + format_double(offset), name, set_name,
                                "log", auc(scores, lab)});
            }
        }
    }

    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << "# metric\tmethod\tset\tscale\tvalue\n";
    for (const auto& r : rows)
        out << r.metric << '\t' << r.method << '\t' << r.set << '\t' << r.scale << '\t'
            << format_double(r.value) << '\n';
    return warn ? kExitWarn : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Normal-gamma background correction for bead-array intensities"};
    app.require_subcommand(1);

    // fit
    auto* fit = app.add_subcommand("fit", "Fit model parameters to one array file");
    std::string fit_array, fit_model = "normgam", fit_out, fit_accuracy = "likelihood";
    fit->add_option("--array", fit_array, "combined array TSV")->required();
    fit->add_option("--model", fit_model,
                    "normgam | normexp-mle | normexp-np | normexp-rma");
    fit->add_option("--out", fit_out, "output parameter file")->required();
    fit->add_option("--accuracy", fit_accuracy, "likelihood | reference");

    // correct
    auto* correct = app.add_subcommand("correct", "Background-correct one array file");
    std::string cor_array, cor_params, cor_model, cor_out;
    bool cor_subtract = false;
    correct->add_option("--array", cor_array, "combined array TSV")->required();
    correct->add_option("--params", cor_params, "parameter file from fit");
    correct->add_flag("--subtract", cor_subtract, "median-subtraction correction");
    correct->add_option("--model", cor_model, "require this model tag in the params file");
    correct->add_option("--out", cor_out, "corrected intensities TSV")->required();

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate a simulation batch directory");
    SimulationSpec spec;
    std::string sim_scenario = "s1", sim_params, sim_pool, sim_out;
    int sim_set = 1, sim_n = 100;
    std::uint64_t sim_seed = 1;
    double sim_p = 0.0;
    std::size_t sim_nreg = 25000, sim_nneg = 1000;
    sim->add_option("--scenario", sim_scenario, "s1 | s2 | s3 | s4");
    sim->add_option("--set", sim_set, "parameter set id 1..9");
    sim->add_option("--params", sim_params, "explicit mu,sigma,k,theta");
    sim->add_option("--n", sim_n, "number of arrays");
    sim->add_option("--n-reg", sim_nreg, "regular probes per array");
    sim->add_option("--n-neg", sim_nneg, "negative probes per array");
    sim->add_option("--p", sim_p, "mixture weight (s2)");
    sim->add_option("--pool", sim_pool, "noise pool file (s4)");
    sim->add_option("--seed", sim_seed, "RNG seed");
    sim->add_option("--out", sim_out, "output batch directory")->required();

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Metrics over a simulated batch");
    std::string ev_batch, ev_methods = "ng-true,ng-mle,nexp-mle,nexp-np,nexp-rma,subtract";
    std::string ev_offsets = "0", ev_out, ev_ad, ev_oc, ev_labels, ev_groups;
    eval->add_option("--batch", ev_batch, "batch directory from simulate")->required();
    eval->add_option("--methods", ev_methods, "comma-separated correction methods");
    eval->add_option("--offsets", ev_offsets, "comma-separated offsets before log2");
    eval->add_option("--out", ev_out, "report TSV")->required();
    eval->add_option("--ad-out", ev_ad, "absolute-deviation profile TSV");
    eval->add_option("--oc-out", ev_oc, "operating characteristics TSV");
    eval->add_option("--labels", ev_labels, "binary probe labels for AUC rows");
    eval->add_option("--groups", ev_groups, "array ranges for the t statistic, e.g. 1-10,11-20");

    // infer-neg
    auto* infer = app.add_subcommand("infer-neg",
                                     "Reconstruct negatives from detection p-values");
    std::string inf_table, inf_out;
    std::size_t inf_nneg = 0;
    infer->add_option("--table", inf_table, "probe_id\\tintensity\\tdetection_pvalue TSV")
        ->required();
    infer->add_option("--n-neg", inf_nneg, "number of negative probes")->required();
    infer->add_option("--out", inf_out, "inferred intensities, one per line")->required();

    // density
    auto* dens = app.add_subcommand("density", "Dump a density grid as x\\tdensity TSV");
    double d_mu = 0.0, d_sigma = 1.0, d_k = 1.0, d_theta = 1.0;
    std::string d_out, d_accuracy = "reference";
    dens->add_option("--mu", d_mu)->required();
    dens->add_option("--sigma", d_sigma)->required();
    dens->add_option("--k", d_k)->required();
    dens->add_option("--theta", d_theta)->required();
    dens->add_option("--accuracy", d_accuracy, "likelihood | reference");
    dens->add_option("--out", d_out, "output TSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        if (*fit) return run_fit(fit_array, fit_model, fit_out, fit_accuracy);
        if (*correct) {
            if (!cor_subtract && cor_params.empty())
                throw std::invalid_argument("need --params or --subtract");
            return run_correct(cor_array, cor_params, cor_subtract, cor_model, cor_out);
        }
        if (*sim) {
            spec.scenario = scenario_from_string(sim_scenario);
            spec.set_id = sim_set;
            spec.n_arrays = sim_n;
            spec.n_reg = sim_nreg;
            spec.n_neg = sim_nneg;
            spec.mixture_p = sim_p;
            spec.seed = sim_seed;
            if (!sim_params.empty()) {
                const auto parts = split_list(sim_params);
                if (parts.size() != 4)
                    throw std::invalid_argument("--params needs mu,sigma,k,theta");
                spec.params_override = NormalGammaParams{
                    std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2]),
                    std::stod(parts[3])};
            }
            return run_simulate(spec, sim_pool, sim_out);
        }
        if (*eval)
            return run_evaluate(ev_batch, ev_methods, ev_offsets, ev_out, ev_ad, ev_oc,
                                ev_labels, ev_groups);
        if (*infer) return run_infer_neg(inf_table, inf_nneg, inf_out);
        if (*dens) return run_density({d_mu, d_sigma, d_k, d_theta}, d_accuracy, d_out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitOk;
}
