// dprobe: validate, run, plot and report experiment plans.
#include "dprobe/error.hpp"
#include "dprobe/plan.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>

namespace {

// --workers beats DPROBE_WORKERS, which beats the plan file.
int resolve_workers(std::optional<int> flag, int from_plan)
{
    if (flag) {
        return *flag;
    }
    if (const char* env = std::getenv("DPROBE_WORKERS"); env && *env) {
        try {
            return std::stoi(env);
        } catch (const std::exception&) {
            std::cerr << "ignoring DPROBE_WORKERS='" << env << "' (not an integer)\n";
        }
    }
    return from_plan;
}

int load(const std::string& path, dprobe::ExperimentPlan& plan)
{
    try {
        plan = dprobe::load_plan(path);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << path << ": " << e.what() << '\n';
        return 1;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"dynamical probe toolkit"};
    app.require_subcommand(1);

    std::string plan_path;
    std::string out_dir = "out";
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;

    auto* validate = app.add_subcommand("validate", "check a plan file without solving");
    validate->add_option("--plan", plan_path, "plan file")->required()->check(CLI::ExistingFile);

    auto* run = app.add_subcommand("run", "solve, indicate and reconstruct; write artifacts");
    run->add_option("--plan", plan_path, "plan file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "seed for sampled checks");

    auto* plot = app.add_subcommand("plot", "redraw SVG plots from a finished run");
    plot->add_option("--out", out_dir, "output directory of a run");

    auto* report = app.add_subcommand("report", "summarise a finished run");
    report->add_option("--out", out_dir, "output directory of a run");

    CLI11_PARSE(app, argc, argv);

    if (*validate) {
        dprobe::ExperimentPlan plan;
        if (load(plan_path, plan) != 0) {
            return 1;
        }
        const auto v = dprobe::validate_plan(plan);
        if (v.empty()) {
            std::cout << "ok\n";
            return 0;
        }
        for (const auto& m : v) {
            std::cout << "violation: " << m << '\n';
        }
        return 1;
    }
    if (*run) {
        dprobe::ExperimentPlan plan;
        if (load(plan_path, plan) != 0) {
            return 1;
        }
        plan.workers = resolve_workers(workers, plan.workers);
        if (seed) {
            plan.seed = *seed;
        }
        dprobe::RunResult r;
        try {
            r = dprobe::run_plan(plan, out_dir);
        } catch (const std::exception& e) {
            std::cerr << "run failed: " << e.what() << '\n';
            return 2;
        }
        for (const auto& m : r.messages) {
            std::cerr << m << '\n';
        }
        for (const auto& f : r.files) {
            std::cout << f << '\n';
        }
        return r.exit_code;
    }
    try {
        if (*plot) {
            for (const auto& f : dprobe::render_plots(out_dir)) {
                std::cout << f << '\n';
            }
            return 0;
        }
        std::cout << dprobe::run_report(out_dir);
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }
    return 0;
}
