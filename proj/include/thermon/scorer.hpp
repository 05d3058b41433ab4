#ifndef THERMON_SCORER_HPP
#define THERMON_SCORER_HPP

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace thermon {

struct ScorerParams {
    int order = 4;            // p: AR order
    double lambda = 0.995;    // forgetting factor
    int w_short = 10;         // short raw-score window
    int w_long = 200;         // long raw-score window
    double sigma_min = 0.1;   // variance floor
    int warmup = 50;          // samples with raw forced to 0

    void validate() const;    // throws ConfigError
};

// Streaming prediction-error scorer: AR(p) coefficients maintained by
// recursive least squares with forgetting, raw score |e|/(4*sigma_e) clamped
// to [0,1], and a score S = Phi((mu_short - mu_long)/sigma_long) that makes
// thresholds comparable across groups.
class Scorer {
  public:
    explicit Scorer(const ScorerParams& params);

    struct StepResult {
        double prediction = 0.0;
        double raw = 0.0;  // in [0,1]
    };

    // Advance by one observed sample.
    StepResult update(double x);

    // Advance past a missing cell: state frozen, previous raw carried forward.
    StepResult skip();

    // Phi of the standardized short/long raw-score mean gap; 0.5 when the
    // windows agree or no post-warmup raw score has been seen yet.
    double likelihood() const;

    std::int64_t samples_seen() const { return count_; }

  private:
    void push_raw(double raw, bool warm);

    ScorerParams params_;
    std::vector<double> coeffs_;             // AR coefficient vector
    std::vector<double> cov_;                // p x p RLS covariance, row-major
    std::deque<double> history_;             // last p values, most recent first
    double err_sq_ = 0.0;                    // forgetting-factor mean squared error
    double last_raw_ = 0.0;
    std::int64_t count_ = 0;
    std::deque<double> raw_short_;
    std::deque<double> raw_long_;
};

struct AnomalyScoreSeries {
    std::string group_id;
    std::vector<std::int64_t> timestamps;
    std::vector<double> scores;  // S per instant, in (0,1)
};

// Scores one aligned series end to end. Throws SeriesShorterThanWarmup.
AnomalyScoreSeries score_stream(const std::string& group_id,
                                const std::vector<std::int64_t>& timestamps,
                                const std::vector<std::optional<double>>& series,
                                const ScorerParams& params);

// Standard normal CDF.
double normal_cdf(double z);

}  // namespace thermon

#endif
