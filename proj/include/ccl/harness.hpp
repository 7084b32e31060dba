#pragma once
// Experiment grids, result rows, CSV I/O and model-vs-measurement reports.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ccl {

enum class FigureId {
    fig1_theory_vs_sim,
    fig2_vary_N,
    fig3_scaled_collapse,
    fig4_vary_base,
    fig5_coc_vs_periodic,
    fig6_vary_a,
    figA_nochurn,
    figA_cost_profile,
};

std::string_view figure_name(FigureId id);
// Throws std::invalid_argument on an unknown name.
FigureId parse_figure(std::string_view name);
const std::vector<FigureId>& all_figures();

struct ExperimentSpec {
    FigureId figure = FigureId::fig1_theory_vs_sim;
    unsigned keyspace_bits = 20;
    std::vector<std::uint64_t> nodes;
    std::vector<unsigned> bases;
    std::vector<double> r_grid;
    double beta = 0.5;   // periodic split
    double alpha = 1.0;  // correction-on-change S1 stabilisation weight
    std::vector<double> a_grid;
    std::optional<double> c;  // unset means c = 1 - a
    std::uint64_t seed = 1;
    unsigned runs = 0;  // simulator seeds per point: seed, seed + 1, ...
    std::size_t cost_stride = 256;  // distance step for the cost profile
    std::string output;

    static ExperimentSpec defaults(FigureId id);
    // std::invalid_argument on an empty grid or out-of-range value.
    void validate() const;
};

struct ResultRow {
    std::string experiment;
    std::string strategy;  // periodic, coc or none
    std::uint64_t N = 0;
    unsigned keyspace_bits = 0;
    unsigned base = 2;
    double r = 0.0;  // NaN when not applicable
    double beta = 0.0;
    double alpha = 0.0;
    double a = 0.0;
    double c = 0.0;
    std::string source;  // analytic or simulated
    std::uint64_t distance = 0;  // nonzero only for per-distance cost rows
    double L = 0.0;
    double f = 0.0;
    double w1 = 0.0;
    double w1p = 0.0;
    double ci_halfwidth = 0.0;
    std::optional<std::uint64_t> seed;
    std::string status = "ok";  // anything else excludes the row from reports

    bool flagged() const { return status != "ok"; }
    // Grid coordinates without the source; used to pair rows.
    std::string point_key() const;
};

// Worker count: CCL_THREADS if set and positive, else hardware concurrency.
unsigned worker_count();

// Runs `count` independent jobs on up to `threads` workers; results keep job order.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job);

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, unsigned threads = worker_count());

inline constexpr std::string_view kCsvSchema = "# schema: ccl-results/1";
extern const std::vector<std::string> kCsvColumns;

// `timestamp` empty omits the generated line.
void write_csv(std::ostream& out, const std::vector<ResultRow>& rows, const std::string& timestamp);
// Writes to `path` via a temporary file so a failed run leaves nothing behind.
void write_csv_file(const std::string& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_csv(std::istream& in);
std::vector<ResultRow> read_csv_file(const std::string& path);

class GridMismatch : public std::runtime_error {
public:
    GridMismatch(const std::string& what, std::vector<std::string> missing)
        : std::runtime_error(what), missing_(std::move(missing)) {}
    const std::vector<std::string>& missing() const { return missing_; }

private:
    std::vector<std::string> missing_;
};

struct PointError {
    std::string point;
    double predicted = 0.0;
    double measured = 0.0;
    double relative_error = 0.0;
};

struct CompareReport {
    std::vector<PointError> points;
    std::vector<std::string> excluded;  // flagged in either file
    double median_error = 0.0;
    double max_error = 0.0;
    double median_tolerance = 0.0;
    double max_tolerance = 0.0;
    bool pass = false;
};

// Relative error of `predicted` L against `measured` L at every shared point.
// Throws GridMismatch if either side has a point the other lacks.
CompareReport compare_report(const std::vector<ResultRow>& predicted,
                             const std::vector<ResultRow>& measured, double median_tolerance = 0.05,
                             double max_tolerance = 0.08);

struct SummaryLine {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Figure-specific checks on a finished result set.
std::vector<SummaryLine> summarize(FigureId id, const std::vector<ResultRow>& rows);

// Largest |(L - A)/A - (f + 3 f^2)| over analytic periodic rows with f <= f_max,
// A being the churn-free length at the same N and base.
double collapse_deviation(const std::vector<ResultRow>& rows, double f_max = 0.25);

}  // namespace ccl
