// Monte-Carlo simulation of the two-basis protocol with honest devices:
// biased basis choice, sifting into key and test sets, plug-in CHSH
// estimation with threshold abort, leak-accounted error correction with hash
// verification, and Toeplitz privacy amplification.
//
// The adversary appears only through the entropy bound curve supplied to
// run_protocol; the simulation itself draws i.i.d. rounds from the Born
// distribution of the configured state and frame.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "diqkd/bound.hpp"
#include "diqkd/quantum.hpp"
#include "diqkd/rng.hpp"

namespace diqkd::protocol {

struct ProtocolConfig {
  std::uint64_t n = 100000;  // rounds
  double p = 0.5;            // P(X = 0); P(Y=0)=q*p, P(Y=1)=q*(1-p)
  double q = 0.9;            // key-vs-test bias; P(Y=2)=P(Y=3)=(1-q)/2
  quantum::DensityMatrix state = quantum::DensityMatrix::singlet();
  quantum::MeasurementFrame frame = quantum::MeasurementFrame::ideal();
  double sTol = 2.2;         // abort unless the estimate exceeds this
  double ecEfficiency = 1.1; // reconciliation leak factor, >= 1
  int verifyBits = 64;       // verification tag length
  std::uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument
};

enum class RoundFate : std::uint8_t { discarded = 0, key = 1, test = 2 };

struct RoundRecord {
  std::uint8_t x = 0;  // Alice input, {0,1}
  std::uint8_t y = 0;  // Bob input, {0,1,2,3}
  std::uint8_t a = 0;  // outcomes as bits: 0 = eigenvalue +1, 1 = -1
  std::uint8_t b = 0;
  RoundFate fate = RoundFate::discarded;
};

struct SiftResult {
  std::vector<std::uint8_t> rawA, rawB;  // bits, key rounds in order
  std::vector<std::uint8_t> keyBasis;    // x (= y) per key round
  // Test rounds, indexed [x][y-2]: counts and coincidence sums.
  std::uint64_t testCount[2][2] = {{0, 0}, {0, 0}};
  std::int64_t testCorrSum[2][2] = {{0, 0}, {0, 0}};  // sum of (+/-1 products)
  std::uint64_t peCount = 0;
};

struct EcResult {
  std::vector<std::uint8_t> correctedB;
  std::uint64_t leakEc = 0;  // syndrome bits accounted (tag bits excluded)
  bool verified = false;
  double qhat00 = 0.0, qhat11 = 0.0;  // observed key-basis error rates
  double lambdaHat = 0.0;             // key rounds in basis 0 / all key rounds
};

struct ProtocolResult {
  bool aborted = false;
  std::string abortReason;
  std::uint64_t rawKeyLength = 0;
  std::uint64_t peCount = 0;
  double sHat = 0.0;
  std::uint64_t leakEc = 0;
  double qhat00 = 0.0, qhat11 = 0.0;
  double lambdaHat = 0.0;
  double cStarAtTol = 0.0;
  std::vector<std::uint8_t> finalKeyA, finalKeyB;
  double empiricalRate = 0.0;  // finalKeyA.size() / n
};

// Inputs and outcomes for one round; a pure function of (config, index).
RoundRecord sample_round(const ProtocolConfig& config, std::uint64_t index);

// All rounds, sampled as a deterministic parallel map. fate is filled in.
std::vector<RoundRecord> sample_rounds(const ProtocolConfig& config);

// Key rounds: y in {0,1} and x == y. Test rounds: y in {2,3}.
SiftResult sift(std::vector<RoundRecord>& rounds);

// max{2, C12 - C02 - C03 - C13} from plug-in correlation estimates. Returns
// nullopt when some (x, y) test cell has no samples.
std::optional<double> estimate_chsh(const SiftResult& sifted);

// Shannon-limit reconciliation abstraction: the syndrome is accounted as
// ceil(efficiency * nKey * (lambdaHat*h(q00) + (1-lambdaHat)*h(q11))) bits
// and lets Bob reproduce Alice's raw key exactly; verification compares
// polynomial hash tags of verifyBits bits over two GF(2^61 - 1) streams.
EcResult error_correct_and_verify(const std::vector<std::uint8_t>& rawA,
                                  const std::vector<std::uint8_t>& rawB,
                                  const std::vector<std::uint8_t>& keyBasis,
                                  const ProtocolConfig& config);

// Verification tag of a bit string; exposed for tamper tests.
std::uint64_t verification_tag(const std::vector<std::uint8_t>& bits,
                               const CounterRng& rng, int verifyBits);

// floor(nKey * (cStarAtTol - lambdaHat*h(q00) - (1-lambdaHat)*h(q11)))
// - verifyBits, clamped at 0.
std::uint64_t final_key_length(std::uint64_t nKey, double cStarAtTol,
                               const EcResult& ec, const ProtocolConfig& config);

// Seeded binary Toeplitz hash of key down to outLen bits.
std::vector<std::uint8_t> toeplitz_hash(const std::vector<std::uint8_t>& key,
                                        std::uint64_t outLen,
                                        const CounterRng& rng);

// Steps 1-5 end to end. curve must be the entropy bound for the weight
// matching Alice's bias (lambda_from_p(config.p)); its value at sTol prices
// the privacy amplification. rounds, when non-null, receives the transcript.
ProtocolResult run_protocol(const ProtocolConfig& config,
                            const bound::BoundCurve& curve,
                            std::vector<RoundRecord>* rounds = nullptr);

} // namespace diqkd::protocol
