#include "gwmv/linear_ot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace gwmv {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPricingEps = 1e-11;
constexpr double kMarginalEps = 1e-12;

// Transportation problem as an uncapacitated min-cost flow on a complete
// bipartite graph plus one artificial root. Real arc e = i * m + j goes from
// supply node i to demand node n + j. Artificial arc real_arcs + u joins node
// u and the root. The spanning tree is stored as adjacency lists; after each
// pivot only the subtree cut off by the leaving arc is re-hung.
class TransportSimplex {
 public:
  TransportSimplex(const Vector& a, const Vector& b, const Matrix& cost)
      : n_(a.size()),
        m_(b.size()),
        nodes_(static_cast<int>(n_ + m_ + 1)),
        root_(static_cast<int>(n_ + m_)),
        real_arcs_(static_cast<std::int64_t>(n_) * m_) {
    cost_.resize(real_arcs_);
    double lo = kInf, hi = -kInf;
    for (Index i = 0; i < n_; ++i) {
      for (Index j = 0; j < m_; ++j) {
        const double c = cost(i, j);
        cost_[i * m_ + j] = c;
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      }
    }
    // Shift to nonnegative costs; the optimum is unchanged because every
    // feasible plan carries the same total mass.
    shift_ = lo;
    for (double& c : cost_) c -= shift_;
    art_cost_ = (hi - lo + 1.0) * nodes_;

    const std::int64_t arcs = real_arcs_ + nodes_ - 1;
    flow_.assign(arcs, 0.0);
    in_tree_.assign(arcs, 0);
    art_src_.resize(nodes_ - 1);
    art_tgt_.resize(nodes_ - 1);
    art_c_.resize(nodes_ - 1);

    parent_.assign(nodes_, -1);
    pred_.assign(nodes_, -1);
    up_.assign(nodes_, 0);
    depth_.assign(nodes_, 0);
    pi_.assign(nodes_, 0.0);
    adj_.assign(nodes_, {});

    const double scale = b.sum() > 0.0 ? a.sum() / b.sum() : 1.0;
    for (int u = 0; u < root_; ++u) {
      const std::int64_t e = real_arcs_ + u;
      const double supply = u < n_ ? a(u) : -b(u - n_) * scale;
      parent_[u] = root_;
      pred_[u] = e;
      depth_[u] = 1;
      in_tree_[e] = 1;
      adj_[u].push_back(e);
      adj_[root_].push_back(e);
      if (supply >= 0.0) {
        art_src_[u] = u;
        art_tgt_[u] = root_;
        art_c_[u] = 0.0;
        flow_[e] = supply;
        up_[u] = 1;
        pi_[u] = 0.0;
      } else {
        art_src_[u] = root_;
        art_tgt_[u] = u;
        art_c_[u] = art_cost_;
        flow_[e] = -supply;
        up_[u] = 0;
        pi_[u] = art_cost_;
      }
    }
    block_ = std::max<std::int64_t>(10, static_cast<std::int64_t>(std::sqrt(static_cast<double>(real_arcs_))));
  }

  long run() {
    const long max_pivots = 20L * (real_arcs_ + nodes_) + 100000L;
    long pivots = 0;
    std::int64_t in_arc = -1;
    while (find_entering(in_arc)) {
      if (++pivots > max_pivots) throw Error(Errc::LinearOtFailure, "network simplex pivot budget exhausted");
      pivot(in_arc);
    }
    return pivots;
  }

  Matrix plan() const {
    Matrix out(n_, m_);
    for (Index i = 0; i < n_; ++i) {
      for (Index j = 0; j < m_; ++j) out(i, j) = flow_[i * m_ + j];
    }
    return out;
  }

  double objective(const Matrix& cost) const {
    double total = 0.0;
    for (Index i = 0; i < n_; ++i) {
      for (Index j = 0; j < m_; ++j) total += flow_[i * m_ + j] * cost(i, j);
    }
    return total;
  }

 private:
  int source(std::int64_t e) const {
    return e < real_arcs_ ? static_cast<int>(e / m_) : art_src_[e - real_arcs_];
  }
  int target(std::int64_t e) const {
    return e < real_arcs_ ? static_cast<int>(n_ + e % m_) : art_tgt_[e - real_arcs_];
  }
  double arc_cost(std::int64_t e) const { return e < real_arcs_ ? cost_[e] : art_c_[e - real_arcs_]; }

  bool find_entering(std::int64_t& in_arc) {
    double best = 0.0;
    std::int64_t count = block_;
    in_arc = -1;
    std::int64_t e = next_arc_;
    for (std::int64_t visited = 0; visited < real_arcs_; ++visited) {
      if (!in_tree_[e]) {
        const int i = static_cast<int>(e / m_);
        const int t = static_cast<int>(n_ + e % m_);
        const double c = cost_[e] + pi_[i] - pi_[t];
        if (c < best) {
          const double tol = kPricingEps * (std::abs(cost_[e]) + std::abs(pi_[i]) + std::abs(pi_[t]));
          if (c < -tol) {
            best = c;
            in_arc = e;
          }
        }
      }
      if (++e == real_arcs_) e = 0;
      if (--count == 0) {
        if (in_arc >= 0) break;
        count = block_;
      }
    }
    next_arc_ = e;
    return in_arc >= 0;
  }

  void pivot(std::int64_t in_arc) {
    const int s = source(in_arc);
    const int t = target(in_arc);
    int u = s, v = t;
    while (u != v) {
      if (depth_[u] >= depth_[v]) {
        u = parent_[u];
      } else {
        v = parent_[v];
      }
    }
    const int join = u;

    // Strongly feasible leaving-arc rule: strict on the source side, non-strict
    // on the target side.
    double delta = kInf;
    int u_out = -1;
    bool on_source_side = false;
    for (int w = s; w != join; w = parent_[w]) {
      const double d = up_[w] ? flow_[pred_[w]] : kInf;
      if (d < delta) {
        delta = d;
        u_out = w;
        on_source_side = true;
      }
    }
    for (int w = t; w != join; w = parent_[w]) {
      const double d = up_[w] ? kInf : flow_[pred_[w]];
      if (d <= delta) {
        delta = d;
        u_out = w;
        on_source_side = false;
      }
    }
    if (u_out < 0) throw Error(Errc::LinearOtFailure, "unbounded pivot in transportation simplex");

    if (delta > 0.0) {
      flow_[in_arc] += delta;
      for (int w = s; w != join; w = parent_[w]) flow_[pred_[w]] -= up_[w] ? delta : -delta;
      for (int w = t; w != join; w = parent_[w]) flow_[pred_[w]] += up_[w] ? delta : -delta;
    }

    const std::int64_t out_arc = pred_[u_out];
    flow_[out_arc] = 0.0;
    in_tree_[out_arc] = 0;
    in_tree_[in_arc] = 1;
    erase_adj(source(out_arc), out_arc);
    erase_adj(target(out_arc), out_arc);
    adj_[s].push_back(in_arc);
    adj_[t].push_back(in_arc);

    const int u_in = on_source_side ? s : t;
    const int v_in = on_source_side ? t : s;
    rehang(u_in, v_in, in_arc);
  }

  void erase_adj(int node, std::int64_t arc) {
    auto& list = adj_[node];
    auto it = std::find(list.begin(), list.end(), arc);
    *it = list.back();
    list.pop_back();
  }

  void set_child(int child, int par, std::int64_t arc) {
    parent_[child] = par;
    pred_[child] = arc;
    depth_[child] = depth_[par] + 1;
    if (source(arc) == child) {
      up_[child] = 1;
      pi_[child] = pi_[par] - arc_cost(arc);
    } else {
      up_[child] = 0;
      pi_[child] = pi_[par] + arc_cost(arc);
    }
  }

  void rehang(int u_in, int v_in, std::int64_t in_arc) {
    set_child(u_in, v_in, in_arc);
    stack_.clear();
    stack_.push_back(u_in);
    while (!stack_.empty()) {
      const int w = stack_.back();
      stack_.pop_back();
      for (const std::int64_t e : adj_[w]) {
        if (e == pred_[w]) continue;
        const int other = source(e) == w ? target(e) : source(e);
        set_child(other, w, e);
        stack_.push_back(other);
      }
    }
  }

  Index n_, m_;
  int nodes_, root_;
  std::int64_t real_arcs_;
  std::vector<double> cost_;
  double shift_ = 0.0;
  double art_cost_ = 0.0;
  std::vector<double> flow_;
  std::vector<std::uint8_t> in_tree_;
  std::vector<int> art_src_, art_tgt_;
  std::vector<double> art_c_;
  std::vector<int> parent_;
  std::vector<std::int64_t> pred_;
  std::vector<std::uint8_t> up_;
  std::vector<int> depth_;
  std::vector<double> pi_;
  std::vector<std::vector<std::int64_t>> adj_;
  std::vector<int> stack_;
  std::int64_t block_ = 10;
  std::int64_t next_arc_ = 0;
};

}  // namespace

LinearOtResult solve_linear_ot(const Vector& a, const Vector& b, const Matrix& cost) {
  if (cost.rows() != a.size() || cost.cols() != b.size()) {
    throw Error(Errc::ShapeMismatch, "cost matrix shape does not match the marginals");
  }
  if (a.size() == 0 || b.size() == 0) throw Error(Errc::ZeroSize, "empty marginal");
  if (!cost.allFinite()) throw Error(Errc::NonFiniteInput, "cost matrix has non-finite entries");
  if ((a.array() < 0.0).any() || (b.array() < 0.0).any()) {
    throw Error(Errc::InvalidMeasure, "marginals must be nonnegative");
  }

  TransportSimplex simplex(a, b, cost);
  LinearOtResult result;
  result.pivots = simplex.run();
  result.plan = simplex.plan();

  const Vector b_scaled = b * (b.sum() > 0.0 ? a.sum() / b.sum() : 1.0);
  const double err = marginal_error(result.plan, a, &b_scaled);
  if (!(err <= kMarginalEps)) {
    throw Error(Errc::LinearOtFailure, "transport plan misses marginals by " + std::to_string(err));
  }
  result.cost = simplex.objective(cost);
  return result;
}

}  // namespace gwmv
