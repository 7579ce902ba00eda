#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"
#include "qslab/bst.hpp"
#include "qslab/formulas.hpp"
#include "qslab/rng.hpp"
#include "qslab/stats.hpp"

namespace qslab::experiments {

using json = nlohmann::json;

inline constexpr std::string_view kVersion = "0.1.0";

enum class OutputFormat { jsonl, csv };

/// Shared configuration of the batch experiments. Every numeric report is a
/// pure function of (seed, config); workers only change the wall clock.
struct ExperimentConfig {
    MasterSeed seed{1};
    std::vector<std::int64_t> n_values;  // empty = subcommand default
    std::int64_t trials = 0;             // 0 = subcommand default
    std::optional<double> delta;         // unset = rule from the coupling module
    std::int64_t pool = 0;               // >0 = pool tail completion (correlates trials)
    std::string out_path;                // empty = no per-trial file
    OutputFormat format = OutputFormat::jsonl;
    unsigned workers = 0;                // 0 = hardware concurrency
};

unsigned resolve_workers(unsigned requested);

/// Runs body(0..count-1), work-stealing across workers. Callers store results
/// by index, so the outcome is independent of the worker count.
template <class Fn>
void for_each_index(std::int64_t count, unsigned workers, Fn&& body) {
    workers = resolve_workers(workers);
    if (workers <= 1 || count <= 1) {
        for (std::int64_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (;;) {
            const std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// Coupled sample paths for trials [0, trials); trial t draws from
/// substream(seed, stream_base + t). A nonempty pool switches the tail
/// completion to pooled attachment.
std::vector<CouplingOutcome> coupled_batch(const ExactValues& exact, MasterSeed seed,
                                           std::uint64_t stream_base, std::int64_t n,
                                           std::int64_t trials, double delta, unsigned workers,
                                           std::span<const double> pool = {});

/// Truncated limit samples, one substream per trial.
std::vector<double> limit_batch(MasterSeed seed, std::uint64_t stream_base,
                                std::int64_t trials, double delta, unsigned workers);

/// Residuals y_n - y_trunc of one batch under both normalizations: the
/// theorem scale sqrt(n/(2 log n)) and the exact scale 1/sigma(n). The two
/// differ only by the factor sigma(n) * clt_scale(n) -> 1.
struct ScaledResidualBatch {
    std::int64_t n = 0;
    double delta = 0.0;
    std::vector<double> raw;             // y_n - y_trunc
    std::vector<double> theorem_scaled;  // clt_scale(n) * raw
    std::vector<double> sigma_scaled;    // raw / sigma(n)
    double mean_discarded_mass_sq = 0.0;
};

ScaledResidualBatch scaled_residual_batch(const ExactValues& exact, MasterSeed seed,
                                          std::uint64_t stream_base, std::int64_t n,
                                          std::int64_t trials, double delta, unsigned workers,
                                          std::span<const double> pool = {});

json moments_json(const MomentAccumulator& acc);

// Subcommand runners. Each returns the summary report: config echo, per-n
// records with statistics, predictions, tolerances and pass flags, wall
// clock, code version. Thresholds are fixed constants, recorded inline.
json run_enumerate(const ExperimentConfig& cfg);
json run_mean_check(const ExperimentConfig& cfg);
json run_variance_profile(const ExperimentConfig& cfg);
json run_clt(const ExperimentConfig& cfg);
json run_l3(const ExperimentConfig& cfg);
json run_bn_decay(const ExperimentConfig& cfg);
json run_coeff_convergence(const ExperimentConfig& cfg);
json run_fixed_point(const ExperimentConfig& cfg);
json run_coupling_audit(const ExperimentConfig& cfg);
json run_formulas(const ExperimentConfig& cfg);

/// True when every pass flag in the report is set.
bool all_passed(const json& report);

}  // namespace qslab::experiments
