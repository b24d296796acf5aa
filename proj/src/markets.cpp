#include "restr/markets.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "restr/rng.hpp"

namespace restr {

Eigen::MatrixXd Market::x() const {
  Eigen::MatrixXd out(J(), 3);
  out.col(0) = price;
  out.col(1) = mushy;
  out.col(2).setOnes();
  return out;
}

void validate_markets(const std::vector<Market>& markets) {
  std::vector<std::string> problems;
  auto complain = [&](int id, const std::string& what) {
    problems.push_back("market " + std::to_string(id) + ": " + what);
  };
  if (markets.empty()) problems.push_back("no markets");
  for (const auto& m : markets) {
    const int J = m.J();
    if (J == 0) complain(m.id, "no products");
    if (m.mushy.size() != J) complain(m.id, "category column length mismatch");
    for (int j = 0; j < J; ++j) {
      if (!std::isfinite(m.price[j]) || m.price[j] <= 0.0)
        complain(m.id, "price must be positive and finite at product " +
                           std::to_string(j + 1));
      if (j < m.mushy.size() && m.mushy[j] != 0.0 && m.mushy[j] != 1.0)
        complain(m.id,
                 "category flag must be 0 or 1 at product " +
                     std::to_string(j + 1));
    }
    if (m.has_shares()) {
      if (m.share.size() != J) {
        complain(m.id, "share column length mismatch");
      } else {
        double sum = 0.0;
        for (int j = 0; j < J; ++j) {
          if (!std::isfinite(m.share[j]) || m.share[j] <= 0.0)
            complain(m.id, "share must be positive at product " +
                               std::to_string(j + 1));
          sum += m.share[j];
        }
        double s0 = 1.0 - sum;
        if (!(s0 > 1e-8))
          complain(m.id, "inside shares must sum to less than 1 "
                         "(outside share implied)");
      }
    }
    if (m.z.size() > 0 && m.z.rows() != J)
      complain(m.id, "instrument rows must match product count");
  }
  if (!problems.empty()) {
    std::string msg = "invalid market data:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw std::invalid_argument(msg);
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    auto b = f.find_first_not_of(" \t");
    auto e = f.find_last_not_of(" \t");
    f = (b == std::string::npos) ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

double parse_number(const std::string& s, int line_no,
                    const std::string& column,
                    std::vector<std::string>& problems) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    problems.push_back("line " + std::to_string(line_no) + ": cannot parse '" +
                       s + "' in column " + column);
    return std::nan("");
  }
}

}  // namespace

std::vector<Market> load_markets_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open market CSV: " + path);

  std::string header_line;
  if (!std::getline(in, header_line))
    throw std::runtime_error("empty market CSV: " + path);
  auto header = split_csv_line(header_line);

  std::vector<std::string> problems;
  int col_market = -1, col_product = -1, col_price = -1, col_mushy = -1,
      col_share = -1;
  std::vector<int> col_z;  // index by instrument number − 1
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const std::string& name = header[c];
    if (name == "market_id") col_market = c;
    else if (name == "product_id") col_product = c;
    else if (name == "price") col_price = c;
    else if (name == "mushy") col_mushy = c;
    else if (name == "share") col_share = c;
    else if (name.size() > 1 && name[0] == 'z' &&
             std::all_of(name.begin() + 1, name.end(),
                         [](char ch) { return std::isdigit(ch) != 0; })) {
      int idx = std::stoi(name.substr(1));
      if (idx < 1) {
        problems.push_back("line 1: instrument column '" + name +
                           "' must be numbered from z1");
        continue;
      }
      if (static_cast<int>(col_z.size()) < idx) col_z.resize(idx, -1);
      col_z[idx - 1] = c;
    } else {
      problems.push_back("line 1: unknown column '" + name + "'");
    }
  }
  for (const char* req : {"market_id", "product_id", "price", "mushy"}) {
    bool found = (std::string(req) == "market_id" && col_market >= 0) ||
                 (std::string(req) == "product_id" && col_product >= 0) ||
                 (std::string(req) == "price" && col_price >= 0) ||
                 (std::string(req) == "mushy" && col_mushy >= 0);
    if (!found)
      problems.push_back("line 1: missing required column '" +
                         std::string(req) + "'");
  }
  for (size_t l = 0; l < col_z.size(); ++l)
    if (col_z[l] < 0)
      problems.push_back("line 1: instrument columns must be contiguous; z" +
                         std::to_string(l + 1) + " is missing");
  if (!problems.empty()) {
    std::string msg = "market CSV header errors in " + path + ":";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw std::runtime_error(msg);
  }
  const int L = static_cast<int>(col_z.size());

  struct Row {
    int product_id;
    double price, mushy, share;
    Eigen::VectorXd z;
  };
  std::map<int, std::vector<Row>> by_market;  // ordered by market id
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      problems.push_back("line " + std::to_string(line_no) + ": expected " +
                         std::to_string(header.size()) + " fields, got " +
                         std::to_string(fields.size()));
      continue;
    }
    Row r;
    double mid = parse_number(fields[col_market], line_no, "market_id",
                              problems);
    double pid = parse_number(fields[col_product], line_no, "product_id",
                              problems);
    r.price = parse_number(fields[col_price], line_no, "price", problems);
    r.mushy = parse_number(fields[col_mushy], line_no, "mushy", problems);
    r.share = (col_share >= 0)
                  ? parse_number(fields[col_share], line_no, "share", problems)
                  : std::nan("");
    r.z.resize(L);
    for (int l = 0; l < L; ++l)
      r.z[l] = parse_number(fields[col_z[l]], line_no, "z" +
                                std::to_string(l + 1), problems);
    if (!std::isfinite(mid) || !std::isfinite(pid)) continue;
    r.product_id = static_cast<int>(pid);
    by_market[static_cast<int>(mid)].push_back(r);
  }
  if (!problems.empty()) {
    std::string msg = "market CSV parse errors in " + path + ":";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw std::runtime_error(msg);
  }

  std::vector<Market> markets;
  markets.reserve(by_market.size());
  for (auto& [mid, rows] : by_market) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) {
                       return a.product_id < b.product_id;
                     });
    Market m;
    m.id = mid;
    const int J = static_cast<int>(rows.size());
    m.price.resize(J);
    m.mushy.resize(J);
    if (col_share >= 0) m.share.resize(J);
    if (L > 0) m.z.resize(J, L);
    for (int j = 0; j < J; ++j) {
      m.price[j] = rows[j].price;
      m.mushy[j] = rows[j].mushy;
      if (col_share >= 0) m.share[j] = rows[j].share;
      if (L > 0) m.z.row(j) = rows[j].z.transpose();
    }
    markets.push_back(std::move(m));
  }
  validate_markets(markets);
  return markets;
}

void save_markets_csv(const std::string& path,
                      const std::vector<Market>& markets) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write market CSV: " + path);
  const bool shares = !markets.empty() && markets.front().has_shares();
  const int L = markets.empty() ? 0 : markets.front().n_instruments();
  out << "market_id,product_id,price,mushy";
  if (shares) out << ",share";
  for (int l = 1; l <= L; ++l) out << ",z" << l;
  out << "\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const auto& m : markets) {
    for (int j = 0; j < m.J(); ++j) {
      out << m.id << ',' << (j + 1) << ',' << num(m.price[j]) << ','
          << num(m.mushy[j]);
      if (shares) out << ',' << num(m.share[j]);
      for (int l = 0; l < L; ++l) out << ',' << num(m.z(j, l));
      out << "\n";
    }
  }
}

std::vector<Market> generate_synthetic_markets(int J, int n_markets,
                                               bool endogenous,
                                               std::uint64_t seed,
                                               Eigen::VectorXd* shifter_out) {
  if (J < 2 || n_markets < 1)
    throw std::invalid_argument("need at least 2 products and 1 market");
  constexpr int kInstruments = 20;
  // price = base_j + cost + a·shifter + b·noise with cost the dominant
  // variance component; instruments load on cost only, so they
  // correlate with price but never with the shifter.  Loadings are
  // solved against the total stacked price variance (including the
  // between-product base spread) so the planted correlations decay
  // across the candidates (≈0.9, 0.7, 0.5, 0.3, 0.1, then ≈0).
  const double sd_cost = 2.2;
  const double a = endogenous ? 0.6 : 0.0;
  const double b = 0.3;
  const double base_span = 2.4, base_noise = 0.2;
  const double var_base =
      base_span * base_span / 12.0 + base_noise * base_noise;
  const double sd_price =
      std::sqrt(var_base + sd_cost * sd_cost + a * a + b * b);
  const double target[5] = {0.9, 0.7, 0.5, 0.3, 0.1};

  Rng root(seed);
  Rng product_stream = root.child(0);
  Eigen::VectorXd base(J);
  Eigen::VectorXd category(J);
  for (int j = 0; j < J; ++j) {
    base[j] = 7.0 +
              base_span * (static_cast<double>(j) /
                               static_cast<double>(J - 1) -
                           0.5) +
              base_noise * product_stream.normal();
    category[j] = (j % 2 == 0) ? 0.0 : 1.0;
  }

  const double beta_price = -0.45, beta_cat = 0.5, beta_const = -0.4,
               shifter_scale = 0.7;
  std::vector<Market> markets(n_markets);
  if (shifter_out) shifter_out->resize(n_markets * J);
  for (int m = 0; m < n_markets; ++m) {
    Rng rng = root.child(1 + m);
    Market& mk = markets[m];
    mk.id = m + 1;
    mk.price.resize(J);
    mk.mushy = category;
    mk.share.resize(J);
    mk.z.resize(J, kInstruments);
    Eigen::VectorXd util(J);
    for (int j = 0; j < J; ++j) {
      double cost = sd_cost * rng.normal();
      double shifter = rng.normal();
      double noise = rng.normal();
      double p = base[j] + cost + a * shifter + b * noise;
      mk.price[j] = std::max(p, 0.25);
      if (shifter_out) (*shifter_out)[m * J + j] = shifter;
      double cost_std = cost / sd_cost;
      for (int l = 0; l < kInstruments; ++l) {
        double load = (l < 5) ? std::min(1.0, target[l] * sd_price / sd_cost)
                              : 0.0;
        mk.z(j, l) = load * cost_std +
                     std::sqrt(std::max(0.0, 1.0 - load * load)) *
                         rng.normal();
      }
      util[j] = beta_price * mk.price[j] + beta_cat * category[j] +
                beta_const + shifter_scale * shifter;
    }
    double total = util.array().exp().sum();
    // Keep the implied outside share strictly inside (0.3, 0.9) by an
    // exact rescale of the exponentiated utilities when needed.
    double s0 = 1.0 / (1.0 + total);
    double clipped = std::min(0.88, std::max(0.32, s0));
    if (clipped != s0) total = (1.0 - clipped) / clipped;
    mk.share = (1.0 - 1.0 / (1.0 + total)) * util.array().exp() /
               util.array().exp().sum();
  }
  validate_markets(markets);
  return markets;
}

std::vector<int> market_row_offsets(const std::vector<Market>& markets) {
  std::vector<int> off(markets.size() + 1, 0);
  for (size_t m = 0; m < markets.size(); ++m)
    off[m + 1] = off[m] + markets[m].J();
  return off;
}

int total_products(const std::vector<Market>& markets) {
  int n = 0;
  for (const auto& m : markets) n += m.J();
  return n;
}

}  // namespace restr
