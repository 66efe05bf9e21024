#include "diqkd/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "diqkd/entropy.hpp"
#include "diqkd/parallel.hpp"

namespace diqkd::protocol {

namespace {

constexpr std::uint64_t kMersenne61 = (1ULL << 61) - 1;

std::uint64_t mulmod61(std::uint64_t a, std::uint64_t b) {
  const unsigned __int128 wide = static_cast<unsigned __int128>(a) * b;
  std::uint64_t lo = static_cast<std::uint64_t>(wide & kMersenne61);
  std::uint64_t hi = static_cast<std::uint64_t>(wide >> 61);
  std::uint64_t r = lo + hi;
  if (r >= kMersenne61) r -= kMersenne61;
  return r;
}

// One polynomial hash sum_i bits[i] * r^(i+1) mod 2^61 - 1.
std::uint64_t poly_hash(const std::vector<std::uint8_t>& bits,
                        std::uint64_t r) {
  std::uint64_t h = 0;
  std::uint64_t pw = r;
  for (std::uint8_t bit : bits) {
    if (bit) {
      h += pw;
      if (h >= kMersenne61) h -= kMersenne61;
    }
    pw = mulmod61(pw, r);
  }
  return h;
}

double safe_h(double q) { return q <= 0.0 ? 0.0 : entropy::binary_entropy(q); }

} // namespace

void ProtocolConfig::validate() const {
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("p must lie in [0, 1]");
  if (!(q >= 0.0 && q <= 1.0))
    throw std::invalid_argument("q must lie in [0, 1]");
  if (!(sTol >= 2.0 && sTol <= quantum::kTsirelson))
    throw std::invalid_argument("sTol must lie in [2, 2*sqrt(2)]");
  if (!(ecEfficiency >= 1.0))
    throw std::invalid_argument("ecEfficiency must be at least 1");
  if (verifyBits < 1 || verifyBits > 64)
    throw std::invalid_argument("verifyBits must lie in [1, 64]");
}

RoundRecord sample_round(const ProtocolConfig& config, std::uint64_t index) {
  const CounterRng rng(config.seed);
  RoundRecord rec;

  rec.x = rng.uniform(index, RngPurpose::basis_alice) < config.p ? 0 : 1;

  const double uy = rng.uniform(index, RngPurpose::basis_bob);
  const double py0 = config.q * config.p;
  const double py1 = config.q;
  const double py2 = config.q + (1.0 - config.q) / 2.0;
  rec.y = uy < py0 ? 0 : uy < py1 ? 1 : uy < py2 ? 2 : 3;

  // Joint Born distribution over the four (a, b) outcome pairs.
  const quantum::Mat2 oa = config.frame.alice(rec.x);
  const quantum::Mat2 ob = config.frame.bob(rec.y);
  const quantum::Mat2 eye = quantum::Mat2::Identity();
  const quantum::Mat2 pa0 = (eye + oa) / 2.0, pa1 = (eye - oa) / 2.0;
  const quantum::Mat2 pb0 = (eye + ob) / 2.0, pb1 = (eye - ob) / 2.0;
  const quantum::Mat4& rho = config.state.matrix();
  const double p00 =
      std::real((rho * quantum::kron(pa0, pb0)).trace());
  const double p01 =
      std::real((rho * quantum::kron(pa0, pb1)).trace());
  const double p10 =
      std::real((rho * quantum::kron(pa1, pb0)).trace());

  const double uo = rng.uniform(index, RngPurpose::outcome);
  if (uo < p00) {
    rec.a = 0;
    rec.b = 0;
  } else if (uo < p00 + p01) {
    rec.a = 0;
    rec.b = 1;
  } else if (uo < p00 + p01 + p10) {
    rec.a = 1;
    rec.b = 0;
  } else {
    rec.a = 1;
    rec.b = 1;
  }
  return rec;
}

std::vector<RoundRecord> sample_rounds(const ProtocolConfig& config) {
  std::vector<RoundRecord> rounds(config.n);
  parallel_for(config.n, [&](std::size_t i) {
    rounds[i] = sample_round(config, static_cast<std::uint64_t>(i));
  });
  return rounds;
}

SiftResult sift(std::vector<RoundRecord>& rounds) {
  SiftResult out;
  for (RoundRecord& rec : rounds) {
    if (rec.y <= 1) {
      if (rec.x == rec.y) {
        rec.fate = RoundFate::key;
        out.rawA.push_back(rec.a);
        out.rawB.push_back(rec.b);
        out.keyBasis.push_back(rec.x);
      } else {
        rec.fate = RoundFate::discarded;
      }
    } else {
      rec.fate = RoundFate::test;
      const int x = rec.x, y = rec.y - 2;
      out.testCount[x][y] += 1;
      out.testCorrSum[x][y] +=
          (rec.a == rec.b) ? 1 : -1;  // product of +/-1 outcomes
      out.peCount += 1;
    }
  }
  return out;
}

std::optional<double> estimate_chsh(const SiftResult& sifted) {
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      if (sifted.testCount[x][y] == 0) return std::nullopt;
  const auto corr = [&](int x, int y) {
    return static_cast<double>(sifted.testCorrSum[x][y]) /
           static_cast<double>(sifted.testCount[x][y]);
  };
  const double s = corr(1, 0) - corr(0, 0) - corr(0, 1) - corr(1, 1);
  return std::max(2.0, s);
}

std::uint64_t verification_tag(const std::vector<std::uint8_t>& bits,
                               const CounterRng& rng, int verifyBits) {
  // Two independent GF(2^61 - 1) polynomial hashes, 32 bits from each;
  // collision probability stays below 2^-verifyBits up to small slack for
  // any fixed pair of distinct inputs.
  const auto key = [&](std::uint64_t draw) {
    std::uint64_t r = 0;
    do {
      r = rng.bits(0, RngPurpose::ec_hash, draw) % kMersenne61;
      draw += 1000;
    } while (r < 2);
    return r;
  };
  const std::uint64_t h1 = poly_hash(bits, key(0));
  const std::uint64_t h2 = poly_hash(bits, key(1));
  const std::uint64_t tag = (h1 << 32) ^ (h2 & 0xffffffffULL) ^ (h1 >> 29);
  return verifyBits >= 64 ? tag : tag & ((1ULL << verifyBits) - 1);
}

EcResult error_correct_and_verify(const std::vector<std::uint8_t>& rawA,
                                  const std::vector<std::uint8_t>& rawB,
                                  const std::vector<std::uint8_t>& keyBasis,
                                  const ProtocolConfig& config) {
  if (rawA.size() != rawB.size() || rawA.size() != keyBasis.size())
    throw std::invalid_argument("raw key and basis streams differ in length");
  EcResult out;
  std::uint64_t n0 = 0, n1 = 0, e0 = 0, e1 = 0;
  for (std::size_t i = 0; i < rawA.size(); ++i) {
    const bool err = rawA[i] != rawB[i];
    if (keyBasis[i] == 0) {
      ++n0;
      e0 += err;
    } else {
      ++n1;
      e1 += err;
    }
  }
  out.qhat00 = n0 ? static_cast<double>(e0) / n0 : 0.0;
  out.qhat11 = n1 ? static_cast<double>(e1) / n1 : 0.0;
  out.lambdaHat =
      rawA.empty() ? 0.0 : static_cast<double>(n0) / static_cast<double>(n0 + n1);

  const double perBit = out.lambdaHat * safe_h(out.qhat00) +
                        (1.0 - out.lambdaHat) * safe_h(out.qhat11);
  out.leakEc = static_cast<std::uint64_t>(
      std::ceil(config.ecEfficiency * static_cast<double>(rawA.size()) * perBit));

  // Shannon-limit decoder abstraction: the accounted syndrome suffices for
  // Bob to reproduce Alice's raw key exactly.
  out.correctedB = rawA;

  const CounterRng rng(config.seed);
  out.verified = verification_tag(rawA, rng, config.verifyBits) ==
                 verification_tag(out.correctedB, rng, config.verifyBits);
  return out;
}

std::uint64_t final_key_length(std::uint64_t nKey, double cStarAtTol,
                               const EcResult& ec,
                               const ProtocolConfig& config) {
  const double perBit = cStarAtTol - ec.lambdaHat * safe_h(ec.qhat00) -
                        (1.0 - ec.lambdaHat) * safe_h(ec.qhat11);
  const double len =
      std::floor(static_cast<double>(nKey) * perBit) - config.verifyBits;
  if (len <= 0.0) return 0;
  return static_cast<std::uint64_t>(len);
}

std::vector<std::uint8_t> toeplitz_hash(const std::vector<std::uint8_t>& key,
                                        std::uint64_t outLen,
                                        const CounterRng& rng) {
  const std::uint64_t n = key.size();
  if (outLen == 0 || n == 0) return {};

  // Diagonal bits t[0 .. n+outLen-2]; output bit i is the parity of
  // sum_j t[i + j] * key[j], one circulant-free Toeplitz row per i.
  const std::uint64_t tBits = n + outLen - 1;
  const std::uint64_t tWords = (tBits + 63) / 64;
  std::vector<std::uint64_t> t(tWords);
  for (std::uint64_t w = 0; w < tWords; ++w)
    t[w] = rng.bits(w, RngPurpose::toeplitz);

  const std::uint64_t outWords = (outLen + 63) / 64;
  std::vector<std::uint64_t> acc(outWords, 0);
  const auto window_word = [&](std::uint64_t bitOff, std::uint64_t w) {
    // 64 bits of t starting at bit offset bitOff + 64*w.
    const std::uint64_t base = bitOff + 64 * w;
    const std::uint64_t wi = base / 64, sh = base % 64;
    std::uint64_t lo = wi < tWords ? t[wi] >> sh : 0;
    if (sh && wi + 1 < tWords) lo |= t[wi + 1] << (64 - sh);
    return lo;
  };
  for (std::uint64_t j = 0; j < n; ++j) {
    if (!key[j]) continue;
    for (std::uint64_t w = 0; w < outWords; ++w)
      acc[w] ^= window_word(j, w);
  }

  std::vector<std::uint8_t> out(outLen);
  for (std::uint64_t i = 0; i < outLen; ++i)
    out[i] = static_cast<std::uint8_t>((acc[i / 64] >> (i % 64)) & 1);
  return out;
}

ProtocolResult run_protocol(const ProtocolConfig& config,
                            const bound::BoundCurve& curve,
                            std::vector<RoundRecord>* rounds) {
  config.validate();
  ProtocolResult res;

  std::vector<RoundRecord> local = sample_rounds(config);
  SiftResult sifted = sift(local);
  if (rounds) *rounds = local;

  res.rawKeyLength = sifted.rawA.size();
  res.peCount = sifted.peCount;
  res.cStarAtTol = curve.value(config.sTol);

  const std::optional<double> sHat = estimate_chsh(sifted);
  if (!sHat) {
    res.aborted = true;
    res.abortReason = "insufficient statistics";
    return res;
  }
  res.sHat = *sHat;
  if (res.sHat <= config.sTol) {
    res.aborted = true;
    res.abortReason = "violation below threshold";
    return res;
  }

  const EcResult ec = error_correct_and_verify(sifted.rawA, sifted.rawB,
                                               sifted.keyBasis, config);
  res.leakEc = ec.leakEc;
  res.qhat00 = ec.qhat00;
  res.qhat11 = ec.qhat11;
  res.lambdaHat = ec.lambdaHat;
  if (!ec.verified) {
    res.aborted = true;
    res.abortReason = "EC failure";
    return res;
  }

  const std::uint64_t outLen =
      final_key_length(res.rawKeyLength, res.cStarAtTol, ec, config);
  const CounterRng rng(config.seed);
  res.finalKeyA = toeplitz_hash(sifted.rawA, outLen, rng);
  res.finalKeyB = toeplitz_hash(ec.correctedB, outLen, rng);
  res.empiricalRate = static_cast<double>(res.finalKeyA.size()) /
                      static_cast<double>(config.n);
  return res;
}

} // namespace diqkd::protocol
