#pragma once
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fock.hpp"

namespace qnet {

// A sensor j mixes a coherent reference alpha_j (upper port) with its share of
// the probe (lower port) and counts photons at both output ports.
enum class Scheme { MS, ME };

struct NetworkConfig {
    Scheme scheme = Scheme::ME;
    std::vector<double> alphas;            // signed amplitudes, length d
    std::vector<double> splitting;         // ME: P_j on the simplex; MS: empty
    std::vector<SingleModeState> probes;   // ME: exactly one; MS: one per sensor

    int d() const { return static_cast<int>(alphas.size()); }
    double mean_nc() const;                // sum of alpha_j^2
    std::vector<double> mean_n() const;    // probe photon number(s)
    double mean_n_total() const;
};

NetworkConfig make_me_config(std::vector<double> alphas, std::vector<double> splitting,
                             SingleModeState probe);
NetworkConfig make_ms_config(std::vector<double> alphas, std::vector<SingleModeState> probes);

// Amplitude placed on the occupation (m_1..m_d) when the probe is split with
// weights P: c(sum m_j) * sqrt(multinomial) * prod P_j^{m_j/2}.
double qc_split_coefficients(const SingleModeState& probe, const std::vector<double>& splitting,
                             const std::vector<int>& occupation);

// Joint photon-count distribution at the splitter outputs for a pure Fock
// probe and no references: multinomial(n; P). Pairs (occupation, probability)
// in lexicographic order.
std::vector<std::pair<std::vector<int>, double>> marginal_qc_distribution(
    const NetworkConfig& config);

// Per-mode photon caps, interleaved (capA_1, capB_1, ..., capA_d, capB_d).
// capA truncates the coherent reference, capB the probe share.
std::vector<int> auto_caps(const NetworkConfig& config);

struct OutcomeTable {
    int d = 0;
    std::vector<int> counts;     // flat, 2d per outcome: n1,m1,...,nd,md; lex order
    std::vector<double> probs;   // same order
    double captured_mass = 0.0;  // sum of probs
    std::vector<double> theta;
    std::vector<int> caps;

    std::size_t size() const { return probs.size(); }
    const int* outcome(std::size_t i) const { return counts.data() + i * 2 * d; }
};

// Exact outcome distribution at theta under the given caps (empty = auto).
// Throws CutoffError when the caps capture less than 1 - 1e-3 of the mass;
// auto caps stay above 1 - 1e-4 by construction.
OutcomeTable probability_table(const NetworkConfig& config, const std::vector<double>& theta,
                               std::vector<int> caps = {});

// i.i.d. categorical draws from the table renormalized by captured_mass.
std::vector<std::vector<int>> sample(const OutcomeTable& table, std::uint64_t seed, int count);
std::vector<std::vector<int>> sample(const OutcomeTable& table, std::mt19937_64& rng, int count);

// CSV body: one '#' metadata line (theta, captured_mass, config hash), then a
// column header, then rows n1,m1,...,nd,md,probability. CRLF line endings.
std::string table_csv(const OutcomeTable& table, const std::string& config_hash);

// Pointwise P(mu|theta) under fixed caps, sharing the table's truncation rules
// but touching only the sectors the outcome lives in. Hot path of likelihood
// evaluation; safe to call concurrently.
class ProbabilityEvaluator {
  public:
    explicit ProbabilityEvaluator(const NetworkConfig& config, std::vector<int> caps = {});
    double prob(const std::vector<double>& theta, const int* mu) const;
    const std::vector<int>& caps() const { return caps_; }
    const NetworkConfig& config() const { return cfg_; }

  private:
    NetworkConfig cfg_;
    std::vector<int> caps_;
    std::vector<std::vector<double>> poi_;  // truncated reference coefficients
    std::vector<double> cw_;                // c(m) * sqrt(m!) (ME)
    int probe_cut_ = 0;
};

// Draws outcomes sensor by sensor for entangled probes whose joint outcome
// space is too large to tabulate: downstream sensors are traced out exactly
// (per-sector orthogonality), so each conditional is a small categorical.
class SequentialSampler {
  public:
    SequentialSampler(const NetworkConfig& config, const std::vector<double>& theta,
                      std::vector<int> caps = {});
    double mass() const { return mass_; }
    std::vector<int> draw(std::mt19937_64& rng) const;
    // P(mu) along the chain; equals the table entry under the same caps.
    double chain_probability(const std::vector<int>& outcome) const;

  private:
    struct Sensor {
        std::vector<std::pair<int, int>> cands;  // (n, m), lex order
        std::vector<std::vector<double>> g;      // per candidate, length <= probe_cut+1
        std::vector<double> rho;                 // traced weight by probe share
    };
    std::vector<double> conv_trunc(const std::vector<double>& a,
                                   const std::vector<double>& b) const;
    // sum_T R_next(T) (sum_S cw(S+T) w(S))^2 with sensors next..d-1 traced out
    double traced_weight(const std::vector<double>& w, int next_sensor) const;

    int d_ = 0;
    int probe_cut_ = 0;
    double mass_ = 0.0;
    std::vector<double> cw_;
    std::vector<Sensor> sensors_;
    std::vector<std::vector<double>> suffixR_;  // suffixR_[j] = conv of rho_{j..d-1}
};

}  // namespace qnet
