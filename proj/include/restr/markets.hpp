#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace restr {

// One market: J products with price (first characteristic) and a binary
// category flag ("mushy", second characteristic).  A constant column is
// appended as the third characteristic by x().  Observed shares are
// optional; when present they are positive and leave an outside share
// s0 = 1 − Σ share ∈ (0,1).  Instruments are optional (J × L).
struct Market {
  int id = 0;
  Eigen::VectorXd price;
  Eigen::VectorXd mushy;
  Eigen::VectorXd share;  // empty when unobserved
  Eigen::MatrixXd z;      // 0×0 when absent

  int J() const { return static_cast<int>(price.size()); }
  bool has_shares() const { return share.size() > 0; }
  int n_instruments() const { return static_cast<int>(z.cols()); }
  double outside_share() const { return 1.0 - share.sum(); }

  // J×3 characteristic matrix: price, category, constant.
  Eigen::MatrixXd x() const;
};

// Throws std::invalid_argument listing every violation (prices positive
// and finite, category flags in {0,1}, shares positive with
// s0 + Σ share = 1 within 1e-8, instrument rows conformable).
void validate_markets(const std::vector<Market>& markets);

// CSV schema: market_id, product_id, price, mushy[, share][, z1..zL].
// Optional columns must be present for all rows or absent entirely.
std::vector<Market> load_markets_csv(const std::string& path);
void save_markets_csv(const std::string& path,
                      const std::vector<Market>& markets);

// Synthetic data shaped like a retail-scanner panel: n_markets markets
// by J products, prices spanning roughly [2, 14], half the products
// flagged as the second category.  In endogenous mode the price is
// correlated with a latent utility shifter that also moves the observed
// shares, and 20 candidate instruments are generated with a planted
// correlation-with-price decay (≈0.9, ≈0.7, rest ≈0) that is driven by
// the cost component only, never the shifter.  In exogenous mode the
// shifter still moves utilities but is independent of price.  Observed
// shares always leave an outside share inside (0.3, 0.9).  If
// shifter_out is non-null it receives the latent shifter stacked in
// market-major row order (for diagnostics only; the shifter is not part
// of the data schema).
std::vector<Market> generate_synthetic_markets(int J, int n_markets,
                                               bool endogenous,
                                               std::uint64_t seed,
                                               Eigen::VectorXd* shifter_out =
                                                   nullptr);

// Row bookkeeping for stacked per-product vectors: markets laid out in
// order, offset(m) = Σ_{k<m} J_k.
std::vector<int> market_row_offsets(const std::vector<Market>& markets);
int total_products(const std::vector<Market>& markets);

}  // namespace restr
