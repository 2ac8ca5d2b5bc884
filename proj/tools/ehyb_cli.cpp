#include "ehyb_commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void add_common(CLI::App& cmd, ehyb::cli::CommonOptions& c) {
    cmd.add_option("--P", c.profile.num_processors, "Number of simulated processors")->check(CLI::PositiveNumber);
    cmd.add_option("--warp", c.profile.warp_size, "Warp (slice) width")->check(CLI::PositiveNumber);
    cmd.add_option("--shm-bytes,--shm", c.profile.shm_max, "Shared memory per block in bytes")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--tau", c.tau, "Bytes per value (4 or 8)")->check(CLI::IsMember({4, 8}));
    cmd.add_option("--parts-file", c.parts_file, "Partition file, one partition id per line")
        ->check(CLI::ExistingFile);
    cmd.add_option("--seed", c.seed, "Seed for partitioning ties and test vectors");
}

} // namespace

int main(int argc, char** argv) {
    using namespace ehyb::cli;

    CLI::App app{"EHYB sparse matrix conversion, verification and benchmarking"};
    app.require_subcommand(1);

    ConvertOptions convert;
    auto* convert_cmd = app.add_subcommand("convert", "Convert a Matrix Market file to an .ehyb container");
    convert_cmd->add_option("input", convert.input, "Input .mtx")->required();
    convert_cmd->add_option("-o,--output", convert.output, "Output .ehyb")->required();
    add_common(*convert_cmd, convert.common);

    VerifyOptions verify;
    auto* verify_cmd = app.add_subcommand("verify", "Check EHYB SpMV against the CSR oracle");
    verify_cmd->add_option("input", verify.input, "Input .mtx or .ehyb")->required();
    verify_cmd->add_option("--matrix", verify.matrix, "Original .mtx when verifying a container");
    verify_cmd->add_option("--vectors", verify.vectors, "Number of pseudo-random test vectors");
    verify_cmd->add_option("--workers", verify.workers, "Simulated concurrent blocks")->check(CLI::PositiveNumber);
    verify_cmd->add_option("--tolerance", verify.tolerance, "Maximum relative error");
    add_common(*verify_cmd, verify.common);

    BenchOptions bench;
    auto* bench_cmd = app.add_subcommand("bench", "Time EHYB and CSR SpMV and preprocessing");
    bench_cmd->add_option("input", bench.input, "Input .mtx")->required();
    bench_cmd->add_option("--reps", bench.reps, "Timed repetitions");
    bench_cmd->add_option("--warmup", bench.warmup, "Untimed warmup repetitions");
    bench_cmd->add_option("--workers", bench.workers, "Simulated concurrent blocks")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--precision", bench.precision, "f32 or f64")->check(CLI::IsMember({"f32", "f64"}));
    bench_cmd->add_option("--out", bench.format, "Report format: csv or json")->check(CLI::IsMember({"csv", "json"}));
    bench_cmd->add_option("-o,--output", bench.output, "Write the report to a file instead of stdout");
    add_common(*bench_cmd, bench.common);

    StatsOptions stats;
    auto* stats_cmd = app.add_subcommand("stats", "Print format and traffic statistics");
    stats_cmd->add_option("input", stats.input, "Input .mtx")->required();
    stats_cmd->add_option("--baseline-seeds", stats.baseline_seeds, "Random partitions averaged for the baseline");
    add_common(*stats_cmd, stats.common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    if (*convert_cmd) return cmd_convert(convert, std::cout, std::cerr);
    if (*verify_cmd) return cmd_verify(verify, std::cout, std::cerr);
    if (*bench_cmd) return cmd_bench(bench, std::cout, std::cerr);
    return cmd_stats(stats, std::cout, std::cerr);
}
