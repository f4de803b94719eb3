#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cfxcert/dataset.hpp"
#include "cfxcert/interval.hpp"
#include "cfxcert/nn.hpp"

namespace cfxcert {

// Mean absolute difference over encoded features.
double normalized_l1(const Vector& a, const Vector& b);

// Robustness verdicts against one abstraction. Output intervals come from
// propagation; when that is undecided the MILP tightening is consulted,
// which can only shrink the intervals and therefore only firm up verdicts.
class RobustnessChecker {
  public:
    RobustnessChecker(const FFNN& model, const PlausibleShiftSet& shifts);

    std::vector<Interval> outputs(const Vector& x) const;
    // Class assigned by every network in the shift set, or nullopt.
    std::optional<int> verdict(const Vector& x) const;
    // The abstraction still assigns the model's own class at x.
    bool sound_at(const Vector& x) const;

    const FFNN& model() const { return *model_; }
    const INN& abstraction() const { return inn_; }

  private:
    const FFNN* model_;
    INN inn_;
};

bool is_sound(const FFNN& model, const PlausibleShiftSet& shifts, const Vector& x);

// True iff every network in the shift set classifies x_prime as 1 - c.
// Throws UnsoundShiftError when the shift set is not sound at x.
bool is_delta_robust(const FFNN& model, const PlausibleShiftSet& shifts, const Vector& x, int c,
                     const Vector& x_prime);

struct EvalCase {
    Vector x;
    int c = 0;
    std::optional<Vector> x_prime;
};

struct DeltaValidity {
    double fraction = 0.0;  // robust / sound
    std::size_t robust = 0;
    std::size_t sound = 0;  // denominator: sound cases, absent CFXs included
    std::size_t unsound = 0;
    std::size_t absent = 0;
};

// Fraction of cases whose CFX is robust under the shift set. Cases where
// the shift set is unsound at x are excluded from the denominator; sound
// cases without a CFX stay in it and count as failures.
DeltaValidity delta_validity(const FFNN& model, const std::vector<EvalCase>& cases,
                             const PlausibleShiftSet& shifts);

struct DeltaEstimate {
    double delta_max = 0.0;
    std::vector<std::pair<double, double>> samples; // (fraction %, delta_a)
    std::size_t sound_instance_count = 0;
};

// Walk the fraction grid upward; per fraction retrain `repeats` times on a
// random subset of d2 and take the max p-distance from the base model.
// delta_max is the last distance whose abstraction stays sound on enough
// d2 rows (min_sound, capped at half the pool). Stops at the first failing
// fraction; throws SolverError when no fraction passes.
DeltaEstimate estimate_delta_max(const FFNN& base, const Dataset& d2, const TrainConfig& cfg,
                                 const std::vector<double>& fractions, std::size_t repeats = 5,
                                 std::size_t min_sound = 50,
                                 double p = std::numeric_limits<double>::infinity(),
                                 std::uint64_t seed = 0);

struct LofResult {
    double score = 0.0; // negative outlier factor: -LOF
    int label = 1;      // -1 iff score < -1.5
};

// Local outlier factor with exactly k Euclidean nearest neighbours per
// point (distance ties broken by row index). Scores arbitrary query
// points against the reference rows; needs at least k+1 reference rows.
std::vector<LofResult> lof_score(const Matrix& reference, const std::vector<Vector>& points,
                                 std::size_t k = 20);

struct EvalReport {
    std::optional<double> vm1;            // valid on the original model
    std::optional<double> vm2;            // valid on the retrained model
    std::optional<double> mean_l1;
    std::optional<double> mean_lof_label;
    std::vector<std::pair<double, double>> delta_validity_curve; // (delta, fraction)
    std::size_t total = 0;
    std::size_t present = 0;
    std::size_t absent = 0;
    std::size_t unsound = 0; // at the primary delta
};

// Table-style report over generated CFXs. Metrics stay empty (rather than
// zero) when no CFX is present. lof_reference may be null to skip the LOF
// column; delta_grid empty means a single point at shifts.delta.
EvalReport evaluate(const FFNN& before, const FFNN& after, const std::vector<EvalCase>& cases,
                    const PlausibleShiftSet& shifts, const Matrix* lof_reference = nullptr,
                    std::size_t k = 20, std::vector<double> delta_grid = {});

nlohmann::json eval_report_to_json(const EvalReport& r);
// Plot-ready "delta,validity" rows.
std::string validity_curve_csv(const EvalReport& r);
// Plot-ready "fraction,delta" rows.
std::string delta_estimate_csv(const DeltaEstimate& e);

} // namespace cfxcert
