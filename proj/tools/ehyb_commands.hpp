#ifndef EHYB_TOOLS_COMMANDS_HPP
#define EHYB_TOOLS_COMMANDS_HPP

#include <ehyb/ehyb.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ehyb::cli {

enum ExitCode : int { exit_ok = 0, exit_verify_failed = 1, exit_usage = 2 };

struct CommonOptions {
    DeviceProfile profile;
    index_t tau = 8;
    std::optional<std::string> parts_file;
    std::uint64_t seed = 0;
};

struct ConvertOptions {
    CommonOptions common;
    std::string input;
    std::string output;
};

struct VerifyOptions {
    CommonOptions common;
    std::string input;
    /// Original matrix, required when `input` is a container.
    std::optional<std::string> matrix;
    unsigned vectors = 4;
    unsigned workers = 1;
    std::optional<double> tolerance;
};

struct BenchOptions {
    CommonOptions common;
    std::string input;
    unsigned reps = 50;
    unsigned warmup = 5;
    unsigned workers = 1;
    std::string precision = "f64";
    std::string format = "csv";
    std::optional<std::string> output;
};

struct StatsOptions {
    CommonOptions common;
    std::string input;
    unsigned baseline_seeds = 10;
};

inline double default_tolerance(index_t tau) { return tau == 4 ? 1e-5 : 1e-12; }

inline CooMatrix load_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return parse_matrix_market(in);
}

inline PipelineOptions pipeline_options(const CommonOptions& c, const CooMatrix& m) {
    if (!m.is_square()) throw DimensionMismatch("matrix must be square");
    PipelineOptions o;
    o.profile = c.profile;
    o.seed = c.seed;
    if (c.parts_file) {
        std::ifstream in(*c.parts_file);
        if (!in) throw Error("cannot open '" + *c.parts_file + "'");
        o.partition = load_partition_file(in, m.n_rows);
    }
    return o;
}

inline bool is_container_path(const std::string& path) {
    return std::filesystem::path(path).extension() == ".ehyb";
}

/// Runs `body` and maps library errors to exit code 2.
template <typename F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return exit_usage;
    }
}

template <typename F>
decltype(auto) with_precision(index_t tau, F&& f) {
    if (tau == 4) return f(float{});
    if (tau == 8) return f(double{});
    throw ValidationError("--tau must be 4 or 8");
}

template <typename Scalar>
nlohmann::json summary(const PipelineResult<Scalar>& r, const CooMatrix& m) {
    const auto& e = r.matrix;
    return {{"dimension", e.dimension},
            {"nnz", m.nnz()},
            {"k", e.params.k},
            {"n_parts", e.params.n_parts},
            {"vec_cache_size", e.params.vec_cache_size},
            {"tau", e.params.tau},
            {"inner_fraction", r.cut.inner_fraction},
            {"ell_nnz", e.nnz_ell},
            {"er_nnz", e.nnz_er},
            {"er_rows", e.n_er_rows()}};
}

inline int cmd_convert(const ConvertOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto m = load_matrix(opt.input);
        const auto po = pipeline_options(opt.common, m);
        return with_precision(opt.common.tau, [&]<typename Scalar>(Scalar) {
            const auto r = build_ehyb<Scalar>(m, po);
            std::ofstream file(opt.output, std::ios::binary);
            if (!file) throw Error("cannot write '" + opt.output + "'");
            write_ehyb_container(r.matrix, file);
            auto record = summary(r, m);
            record["output"] = opt.output;
            out << record.dump() << '\n';
            return int{exit_ok};
        });
    });
}

template <typename Scalar>
int verify_matrix(const EhybMatrix<Scalar>& e, const CooMatrix& m, const VerifyOptions& opt, std::ostream& out) {
    if (e.dimension != m.n_rows || !m.is_square()) {
        throw DimensionMismatch("container dimension " + std::to_string(e.dimension) + " does not match matrix " +
                                std::to_string(m.n_rows) + "x" + std::to_string(m.n_cols));
    }
    const double tolerance = opt.tolerance.value_or(default_tolerance(sizeof(Scalar)));
    const auto csr = coo_to_csr(m);
    ExecutionConfig cfg;
    cfg.worker_count = opt.workers;
    double worst = 0.0;
    for (unsigned d = 0; d < opt.vectors; ++d) {
        const auto seed = opt.common.seed + d;
        const auto x = lcg_vector(m.n_rows, seed);
        const std::vector<Scalar> xs(x.begin(), x.end());
        const auto ref = spmv_csr(csr, x);
        const auto y = spmv_ehyb_user<Scalar>(e, xs, cfg);
        const double error = max_relative_error<Scalar>(y, ref);
        worst = std::max(worst, error);
        if (!(error <= tolerance)) {
            out << "FAIL seed=" << seed << " max_rel_error=" << error << " tolerance=" << tolerance << '\n';
            return exit_verify_failed;
        }
    }
    out << "PASS max_rel_error=" << worst << " vectors=" << opt.vectors << " tolerance=" << tolerance << '\n';
    return exit_ok;
}

inline int cmd_verify(const VerifyOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (is_container_path(opt.input)) {
            if (!opt.matrix) throw Error("verifying a container needs --matrix <original.mtx>");
            const auto m = load_matrix(*opt.matrix);
            std::ifstream in(opt.input, std::ios::binary);
            if (!in) throw Error("cannot open '" + opt.input + "'");
            auto any = read_any_ehyb_container(in);
            return std::visit([&](const auto& e) { return verify_matrix(e, m, opt, out); }, any);
        }
        const auto m = load_matrix(opt.input);
        const auto po = pipeline_options(opt.common, m);
        return with_precision(opt.common.tau, [&]<typename Scalar>(Scalar) {
            return verify_matrix(build_ehyb<Scalar>(m, po).matrix, m, opt, out);
        });
    });
}

template <typename F>
double median_seconds(unsigned warmup, unsigned reps, F&& f) {
    using clock = std::chrono::steady_clock;
    for (unsigned i = 0; i < warmup; ++i) f();
    std::vector<double> samples;
    samples.reserve(reps);
    for (unsigned i = 0; i < std::max(1u, reps); ++i) {
        auto t0 = clock::now();
        f();
        samples.push_back(std::chrono::duration<double>(clock::now() - t0).count());
    }
    std::sort(samples.begin(), samples.end());
    const auto n = samples.size();
    return n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

template <typename Scalar>
BenchReport run_bench(const CooMatrix& m, const PipelineOptions& po, const BenchOptions& opt, const std::string& name) {
    const auto built = build_ehyb<Scalar>(m, po);
    const auto& e = built.matrix;
    const auto x = lcg_vector(m.n_rows, opt.common.seed);
    const std::vector<Scalar> xs(x.begin(), x.end());
    const auto x_reordered = permute_vector<Scalar>(xs, e.plan);
    const auto csr = coo_to_csr(m);

    ExecutionConfig cfg;
    cfg.worker_count = opt.workers;
    cfg.scheduling = Scheduling::stealing;
    cfg.record_stats = false;

    const double t_ehyb = median_seconds(opt.warmup, opt.reps, [&] { (void)spmv_ehyb<Scalar>(e, x_reordered, cfg); });
    const double t_csr = median_seconds(opt.warmup, opt.reps, [&] { (void)spmv_csr(csr, x); });

    BenchReport r;
    r.matrix = name;
    r.dimension = m.n_rows;
    r.nnz = m.nnz();
    r.n_parts = e.params.n_parts;
    r.vec_cache_size = e.params.vec_cache_size;
    r.inner_fraction = built.cut.inner_fraction;
    r.ell_nnz = e.nnz_ell;
    r.er_nnz = e.nnz_er;
    const auto fp = footprint_stats(e);
    r.footprint_bytes = fp.total_bytes;
    r.slot_savings = fp.slot_savings;
    r.precision = sizeof(Scalar) == 4 ? "f32" : "f64";
    r.workers = opt.workers;
    r.reps = opt.reps;
    r.warmup = opt.warmup;
    r.partition_seconds = built.partition_seconds;
    r.assemble_seconds = built.assemble_seconds;
    r.preprocessing_ratio = t_ehyb > 0.0 ? (built.partition_seconds + built.assemble_seconds) / t_ehyb : 0.0;
    r.kernels.push_back({"ehyb", t_ehyb, gflops(r.nnz, t_ehyb)});
    r.kernels.push_back({"csr-oracle", t_csr, gflops(r.nnz, t_csr)});
    return r;
}

inline int cmd_bench(const BenchOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (opt.precision != "f32" && opt.precision != "f64") throw ValidationError("--precision must be f32 or f64");
        if (opt.format != "csv" && opt.format != "json") throw ValidationError("--out must be csv or json");
        const auto m = load_matrix(opt.input);
        const auto po = pipeline_options(opt.common, m);
        const auto name = std::filesystem::path(opt.input).stem().string();
        const auto report = opt.precision == "f32" ? run_bench<float>(m, po, opt, name)
                                                   : run_bench<double>(m, po, opt, name);
        std::ofstream file;
        if (opt.output) {
            file.open(*opt.output);
            if (!file) throw Error("cannot write '" + *opt.output + "'");
        }
        std::ostream& sink = opt.output ? file : out;
        if (opt.format == "csv") {
            write_bench_csv(report, sink);
        } else {
            sink << to_json(report).dump(2) << '\n';
        }
        return int{exit_ok};
    });
}

template <typename Scalar>
nlohmann::json stats_record(const CooMatrix& m, const PipelineResult<Scalar>& r, unsigned baseline_seeds) {
    const auto& e = r.matrix;
    const auto fp = footprint_stats(e);

    // Row widths per partition, taken from the classification of the
    // final partition; padding rows count as width 0.
    const auto cls = classify_rows(m, r.partition);
    nlohmann::json histogram = nlohmann::json::array();
    for (index_t part = 0; part < e.params.n_parts; ++part) {
        std::map<index_t, index_t> widths;
        widths[0] = e.params.vec_cache_size - r.partition.part_sizes[part];
        if (widths[0] == 0) widths.erase(0);
        for (index_t new_row = e.part_boundary[part]; new_row < e.part_boundary[part + 1]; ++new_row) {
            const auto old_row = e.plan.inverse_table[new_row];
            if (old_row < e.dimension) ++widths[cls.inner_count[old_row]];
        }
        nlohmann::json entry = nlohmann::json::object();
        for (const auto& [w, count] : widths) entry[std::to_string(w)] = count;
        histogram.push_back({{"part", part}, {"widths", entry}});
    }

    double baseline = 0.0;
    for (unsigned s = 0; s < baseline_seeds; ++s) {
        const auto rp = random_partition(m.n_rows, e.params.n_parts, e.params.vec_cache_size, s + 1);
        baseline += cut_metrics(m, rp).inner_fraction;
    }
    if (baseline_seeds > 0) baseline /= baseline_seeds;

    return {{"dimension", e.dimension},
            {"padded_dimension", e.padded_dimension},
            {"nnz", m.nnz()},
            {"n_parts", e.params.n_parts},
            {"vec_cache_size", e.params.vec_cache_size},
            {"inner_fraction", r.cut.inner_fraction},
            {"random_baseline_inner_fraction", baseline},
            {"ell_nnz", e.nnz_ell},
            {"er_nnz", e.nnz_er},
            {"er_rows", e.n_er_rows()},
            {"padding_overhead",
             static_cast<double>(e.padded_dimension - e.dimension) / static_cast<double>(e.dimension)},
            {"ell_padding_slots", fp.ell_padding_slots},
            {"footprint_bytes", fp.total_bytes},
            {"slot_savings", fp.slot_savings},
            {"structure_savings", fp.structure_savings},
            {"traffic_model_bytes", traffic_model(e)},
            {"width_histogram", histogram}};
}

inline int cmd_stats(const StatsOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto m = load_matrix(opt.input);
        const auto po = pipeline_options(opt.common, m);
        return with_precision(opt.common.tau, [&]<typename Scalar>(Scalar) {
            out << stats_record(m, build_ehyb<Scalar>(m, po), opt.baseline_seeds).dump(2) << '\n';
            return int{exit_ok};
        });
    });
}

} // namespace ehyb::cli

#endif // EHYB_TOOLS_COMMANDS_HPP
