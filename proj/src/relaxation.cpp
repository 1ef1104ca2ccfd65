#include "monopf/relaxation.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <json.hpp>
#include <map>
#include <random>
#include <set>
#include <unordered_map>

#include "monopf/domain.hpp"
#include "monopf/errors.hpp"
#include "monopf/pf.hpp"
#include "monopf/vi.hpp"

namespace monopf {

using json = nlohmann::ordered_json;

int VariableLayout::bus_of(const Network& net, int var) const {
  if (var < k) {
    const auto nt = static_cast<int>(net.nsb().size());
    return var < nt ? net.nsb()[static_cast<std::size_t>(var)] : net.pq()[static_cast<std::size_t>(var - nt)];
  }
  return var < k + n ? var - k : var - k - n;
}

std::string VariableLayout::name(int var) const {
  if (var < k) return "z" + std::to_string(var);
  if (var < k + n) return "ReV" + std::to_string(var - k);
  return "ImV" + std::to_string(var - k - n);
}

namespace {

int slack_bus(const Network& net) {
  for (int i = 0; i < net.num_buses(); ++i) {
    if (net.buses()[static_cast<std::size_t>(i)].type == BusType::slack) return i;
  }
  throw InvalidDataError("network has no slack bus");
}

struct PhasorPolys {
  std::vector<Polynomial> re, im;

  PhasorPolys(const Network& net, const VariableLayout& L, bool eliminate) {
    const int s = slack_bus(net);
    for (int i = 0; i < L.n; ++i) {
      if (eliminate && i == s) {
        re.emplace_back(1.0);
        im.emplace_back();
      } else {
        re.push_back(Polynomial::variable(L.re(i)));
        im.push_back(Polynomial::variable(L.im(i)));
      }
    }
  }
  // Re(V_i conj V_j), Im(V_i conj V_j), |V_i|^2
  [[nodiscard]] Polynomial real_product(int i, int j) const { return re[i] * re[j] + im[i] * im[j]; }
  [[nodiscard]] Polynomial imag_product(int i, int j) const { return im[i] * re[j] - re[i] * im[j]; }
  [[nodiscard]] Polynomial sq(int i) const { return real_product(i, i); }
};

std::vector<std::pair<Monomial, double>> sorted_terms(const Polynomial& p) {
  std::vector<std::pair<Monomial, double>> t(p.terms().begin(), p.terms().end());
  std::sort(t.begin(), t.end(), [](const auto& a, const auto& b) { return Monomial::graded_less(a.first, b.first); });
  return t;
}

bool contains(const std::vector<int>& sorted_set, const std::vector<int>& vars) {
  return std::all_of(vars.begin(), vars.end(),
                     [&](int v) { return std::binary_search(sorted_set.begin(), sorted_set.end(), v); });
}

}  // namespace

std::vector<Polynomial> jacobian_polynomials(const Network& net, bool eliminate_slack) {
  const VariableLayout L{net.dim(), net.num_buses()};
  const PhasorPolys V(net, L, eliminate_slack);
  const auto st = jacobian_stencil(net);
  std::vector<Polynomial> J(static_cast<std::size_t>(L.k * L.k));
  for (const auto& t : st.terms) {
    Polynomial q;
    switch (t.kind) {
      case QuadKind::squared_magnitude: q = V.sq(t.i); break;
      case QuadKind::real_product: q = V.real_product(t.i, t.j); break;
      case QuadKind::imag_product: q = V.imag_product(t.i, t.j); break;
    }
    J[static_cast<std::size_t>(t.row * L.k + t.col)].add_scaled(q, t.coefficient);
  }
  for (auto& p : J) p.prune(1e-14);
  return J;
}

std::size_t CliqueDecomposition::largest_moment_block() const {
  std::size_t m = 0;
  for (const auto& c : cliques) m = std::max(m, basis_size(c.size(), 2));
  return m;
}

int CliqueDecomposition::clique_containing(const std::vector<int>& vars) const {
  for (std::size_t c = 0; c < cliques.size(); ++c) {
    if (contains(cliques[c], vars)) return static_cast<int>(c);
  }
  return -1;
}

CliqueDecomposition clique_decomposition(const Network& net, bool sparse, bool eliminate_slack) {
  CliqueDecomposition cd;
  cd.layout = {net.dim(), net.num_buses()};
  const auto& L = cd.layout;
  const int s = slack_bus(net);
  for (int v = 0; v < L.count(); ++v) {
    if (eliminate_slack && v >= L.k && L.bus_of(net, v) == s) continue;
    cd.variables.push_back(v);
  }
  if (!sparse) {
    cd.cliques.push_back(cd.variables);
    std::set<int> buses;
    for (int v : cd.variables) buses.insert(L.bus_of(net, v));
    cd.bus_cliques.emplace_back(buses.begin(), buses.end());
    return cd;
  }

  // bus interaction graph from the term-wise variable graph
  const int n = L.n;
  std::vector<std::set<int>> adj(static_cast<std::size_t>(n));
  auto connect = [&](const std::set<int>& vars) {
    std::set<int> buses;
    for (int v : vars) buses.insert(L.bus_of(net, v));
    for (int a : buses) {
      for (int b : buses) {
        if (a != b) adj[static_cast<std::size_t>(a)].insert(b);
      }
    }
  };
  const auto J = jacobian_polynomials(net, eliminate_slack);
  for (int a = 0; a < L.k; ++a) {
    for (int c = 0; c < L.k; ++c) {
      for (const auto& [m, coef] : J[static_cast<std::size_t>(a * L.k + c)].terms()) {
        std::set<int> vars{a, c};
        for (int v : m.vars()) vars.insert(v);
        connect(vars);
      }
    }
  }
  for (const auto& line : net.lines()) {
    std::set<int> vars;
    for (int b : {line.from, line.to}) {
      if (eliminate_slack && b == s) continue;
      vars.insert(L.re(b));
      vars.insert(L.im(b));
    }
    connect(vars);
  }

  std::vector<int> weight(static_cast<std::size_t>(n), 0);
  std::vector<bool> alive(static_cast<std::size_t>(n), false);
  for (int v : cd.variables) {
    const int b = L.bus_of(net, v);
    ++weight[static_cast<std::size_t>(b)];
    alive[static_cast<std::size_t>(b)] = true;
  }

  // minimum degree, ties by neighbour weight then index
  std::vector<std::set<int>> raw;
  for (;;) {
    int best = -1;
    std::pair<std::size_t, int> key{0, 0};
    for (int b = 0; b < n; ++b) {
      if (!alive[static_cast<std::size_t>(b)]) continue;
      int nw = 0;
      for (int u : adj[static_cast<std::size_t>(b)]) nw += weight[static_cast<std::size_t>(u)];
      const std::pair<std::size_t, int> kb{adj[static_cast<std::size_t>(b)].size(), nw};
      if (best < 0 || kb < key) {
        best = b;
        key = kb;
      }
    }
    if (best < 0) break;
    const auto nb = adj[static_cast<std::size_t>(best)];
    std::set<int> clique = nb;
    clique.insert(best);
    raw.push_back(clique);
    for (int a : nb) {
      for (int c : nb) {
        if (a != c) adj[static_cast<std::size_t>(a)].insert(c);
      }
      adj[static_cast<std::size_t>(a)].erase(best);
    }
    adj[static_cast<std::size_t>(best)].clear();
    alive[static_cast<std::size_t>(best)] = false;
  }

  for (std::size_t i = 0; i < raw.size(); ++i) {
    bool maximal = true;
    for (std::size_t j = 0; j < raw.size() && maximal; ++j) {
      if (i == j) continue;
      const bool subset = std::includes(raw[j].begin(), raw[j].end(), raw[i].begin(), raw[i].end());
      if (subset && (raw[j].size() > raw[i].size() || j < i)) maximal = false;
    }
    if (!maximal) continue;
    std::vector<int> vars;
    for (int v : cd.variables) {
      if (raw[i].count(L.bus_of(net, v))) vars.push_back(v);
    }
    cd.cliques.push_back(vars);
    cd.bus_cliques.emplace_back(raw[i].begin(), raw[i].end());
  }
  return cd;
}

namespace {

class MomentRegistry {
 public:
  explicit MomentRegistry(MomentSdp& sdp) : sdp_(sdp) {}

  int id(const Monomial& m) {
    const auto [it, inserted] = index_.try_emplace(m.key(), 0);
    if (inserted) {
      it->second = 1 + static_cast<int>(sdp_.moments.size());
      sdp_.moments.push_back(m);
      sdp_.moment_var.push_back(it->second);
    }
    return it->second;
  }
  [[nodiscard]] bool has(const Monomial& m) const { return index_.count(m.key()) > 0; }

 private:
  MomentSdp& sdp_;
  std::unordered_map<std::uint32_t, int> index_;
};

// Magnitude range implied by the domain: each line keeps |V_j| / |V_i| within
// [gamma, 1 / gamma], propagated from buses with a fixed magnitude.
std::vector<std::pair<double, double>> implied_magnitude_range(const Network& net, const std::vector<double>& gamma) {
  const auto n = static_cast<std::size_t>(net.num_buses());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> lo(n, -inf), hi(n, inf);  // log |V|
  for (std::size_t i = 0; i < n; ++i) {
    if (net.buses()[i].type != BusType::pq) lo[i] = hi[i] = std::log(net.buses()[i].v_set);
  }
  for (std::size_t pass = 0; pass < n; ++pass) {
    bool changed = false;
    for (std::size_t l = 0; l < net.lines().size(); ++l) {
      const auto& e = net.lines()[l];
      const double w = -std::log(gamma[l]);
      for (auto [a, b] : {std::pair{e.from, e.to}, std::pair{e.to, e.from}}) {
        const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
        if (lo[ua] - w > lo[ub] + 1e-15) lo[ub] = lo[ua] - w, changed = true;
        if (hi[ua] + w < hi[ub] - 1e-15) hi[ub] = hi[ua] + w, changed = true;
      }
    }
    if (!changed) break;
  }
  std::vector<std::pair<double, double>> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = {std::exp(lo[i]), std::exp(hi[i])};
  return r;
}

}  // namespace

MomentSdp build_moment_sdp(const Network& net, double gamma, const RelaxationOptions& opts) {
  return build_moment_sdp(net, std::vector<double>(net.lines().size(), gamma), opts);
}

MomentSdp build_moment_sdp(const Network& net, const std::vector<double>& gamma, const RelaxationOptions& opts) {
  if (gamma.size() != net.lines().size()) throw ContractViolation("one gamma per line required");
  for (double g : gamma) {
    if (!(g > 0.0 && g <= 1.0)) throw ContractViolation("gamma must lie in (0, 1]");
  }
  MomentSdp sdp;
  sdp.cliques = clique_decomposition(net, opts.sparse, opts.eliminate_slack);
  const auto& cd = sdp.cliques;
  const auto& L = cd.layout;
  const PhasorPolys V(net, L, opts.eliminate_slack);
  const int s = slack_bus(net);
  auto& P = sdp.problem;
  MomentRegistry reg(sdp);
  sdp.t_var = 0;
  sdp.one_var = reg.id(Monomial());

  std::vector<MonomialBasis> b1, b2;
  for (const auto& c : cd.cliques) {
    b2.emplace_back(c, 2);
    b1.emplace_back(c, 1);
  }
  auto supported = [&](const Monomial& m) { return cd.clique_containing(m.vars()) >= 0; };

  // moment matrices
  for (std::size_t c = 0; c < cd.cliques.size(); ++c) {
    const auto& B = b2[c];
    PsdBlock blk;
    blk.dim = static_cast<int>(B.size());
    blk.label = "moment clique " + std::to_string(c);
    for (int r = 0; r < blk.dim; ++r) {
      for (int q = r; q < blk.dim; ++q) blk.entries.push_back({reg.id(B[r] * B[q]), r, q, 1.0});
    }
    sdp.moment_block_dims.push_back(blk.dim);
    P.blocks.push_back(std::move(blk));
  }

  auto localizing = [&](const Polynomial& g, const MonomialBasis& B, const std::string& label) {
    PsdBlock blk;
    blk.dim = static_cast<int>(B.size());
    blk.label = label;
    for (int r = 0; r < blk.dim; ++r) {
      for (int q = r; q < blk.dim; ++q) {
        const auto prod = g * Polynomial::monomial(B[r] * B[q]);
        for (const auto& [m, v] : sorted_terms(prod)) blk.entries.push_back({reg.id(m), r, q, v});
      }
    }
    sdp.localizing_block_dims.push_back(blk.dim);
    const int ir = B.index_of(Monomial::variable(L.re(s)));
    const int ii = B.index_of(Monomial::variable(L.im(s)));
    if (!opts.eliminate_slack && ir >= 0 && ii >= 0) {
      // Re V_0 - 1 and Im V_0 lie in the kernel once the slack equalities hold
      Matrix K = Matrix::Zero(blk.dim, 2);
      K(0, 0) = -1.0;
      K(ir, 0) = 1.0;
      K(ii, 1) = 1.0;
      const Eigen::HouseholderQR<Matrix> qr(K);
      const Matrix Q = qr.householderQ() * Matrix::Identity(blk.dim, blk.dim);
      blk.basis = Q.rightCols(blk.dim - 2);
      blk.dim -= 2;
    }
    P.blocks.push_back(std::move(blk));
  };

  // domain constraints Re(V_i conj V_j) >= gamma |V_w|^2, w in {i, j}
  for (std::size_t l = 0; l < net.lines().size(); ++l) {
    const auto& line = net.lines()[l];
    const auto C = V.real_product(line.from, line.to);
    for (int w : {line.from, line.to}) {
      auto g = C - V.sq(w) * gamma[l];
      g.prune();
      const int c = cd.clique_containing(g.support());
      if (c < 0) throw ContractViolation("line variables are not covered by a clique");
      localizing(g, b1[static_cast<std::size_t>(c)],
                 "domain line " + std::to_string(line.from) + "-" + std::to_string(line.to) + " bus " +
                     std::to_string(w));
    }
  }

  // Without these the relaxation may place the z mass where every |V| vanishes.
  // Localized in each clique holding the bus. Ceilings are divided by hi^2,
  // which reaches hundreds several hops away at small gamma.
  const auto range = implied_magnitude_range(net, gamma);
  for (int i : net.pq()) {
    const auto [lo, hi] = range[static_cast<std::size_t>(i)];
    if (!std::isfinite(hi)) continue;
    for (std::size_t c = 0; c < cd.cliques.size(); ++c) {
      if (!contains(cd.cliques[c], {L.re(i), L.im(i)})) continue;
      const auto tag = " bus " + std::to_string(i) + " clique " + std::to_string(c);
      localizing(V.sq(i) - Polynomial(lo * lo), b1[c], "magnitude floor" + tag);
      localizing(Polynomial(1.0) - V.sq(i) * (1.0 / (hi * hi)), b1[c], "magnitude ceiling" + tag);
    }
  }

  // equalities h = 0 localized with degree-1 products
  auto add_equality = [&](const Polynomial& p, double rhs) {
    LinearEquality eq;
    for (const auto& [m, v] : sorted_terms(p)) eq.terms.emplace_back(reg.id(m), v);
    eq.rhs = rhs;
    P.equalities.push_back(std::move(eq));
  };
  // polynomials h with L(h m) = 0 for every m of a clique's degree-2 basis
  std::vector<std::vector<Polynomial>> kernel(cd.cliques.size());
  auto localize_equality = [&](const Polynomial& h) {
    std::vector<int> targets;
    const int c0 = cd.clique_containing(h.support());
    if (c0 >= 0) {
      targets.push_back(c0);
      kernel[static_cast<std::size_t>(c0)].push_back(h);
    } else {
      for (std::size_t c = 0; c < cd.cliques.size(); ++c) targets.push_back(static_cast<int>(c));
    }
    std::set<std::uint32_t> seen;
    for (int c : targets) {
      const auto& B = b1[static_cast<std::size_t>(c)];
      for (std::size_t r = 0; r < B.size(); ++r) {
        for (std::size_t q = r; q < B.size(); ++q) {
          const auto bb = B[r] * B[q];
          if (!seen.insert(bb.key()).second) continue;
          const auto p = h * Polynomial::monomial(bb);
          if (std::all_of(p.terms().begin(), p.terms().end(), [&](const auto& t) { return supported(t.first); })) {
            add_equality(p, 0.0);
          }
        }
      }
    }
  };
  for (int i : net.pv()) {
    const double v = net.buses()[static_cast<std::size_t>(i)].v_set;
    localize_equality(V.sq(i) - Polynomial(v * v));
  }
  if (!opts.eliminate_slack) {
    const auto d = V.re[s] - Polynomial(1.0);
    localize_equality(d * d + V.im[s] * V.im[s]);
    std::set<std::uint32_t> seen;
    for (std::size_t c = 0; c < cd.cliques.size(); ++c) {
      if (!contains(cd.cliques[c], {L.re(s), L.im(s)})) continue;
      for (const auto& b : b1[c].monomials()) {
        const auto bp = Polynomial::monomial(b);
        add_equality(V.re[s] * bp - bp, 0.0);
        add_equality(V.im[s] * bp, 0.0);
      }
      // L(|V_0 - 1|^2 b^2) = 0 and a PSD moment matrix force (Re V_0 - 1) b and
      // Im V_0 b into its kernel; state that explicitly and reduce the block
      for (const auto& b : b1[c].monomials()) {
        const auto bp = Polynomial::monomial(b);
        for (const auto& q : {d * bp, V.im[s] * bp}) {
          kernel[c].push_back(q);
          for (const auto& m : b2[c].monomials()) {
            const auto row = q * Polynomial::monomial(m);
            std::uint64_t h = 1469598103934665603ull;
            for (const auto& [mm, v] : sorted_terms(row)) h = (h ^ mm.key()) * 1099511628211ull ^ std::hash<double>{}(v);
            if (seen.insert(static_cast<std::uint32_t>(h ^ (h >> 32))).second) add_equality(row, 0.0);
          }
        }
      }
    }
  }
  {
    Polynomial zz(-1.0);
    for (int a = 0; a < L.k; ++a) zz.add_term(Monomial::variable(L.z(a)) * Monomial::variable(L.z(a)), 1.0);
    localize_equality(zz);
  }
  P.equalities.push_back({{{sdp.one_var, 1.0}}, 1.0});

  // The equalities force each such h into the kernel of the moment matrix, so
  // the block has no interior. Restrict it to the orthogonal complement.
  for (std::size_t c = 0; c < cd.cliques.size(); ++c) {
    if (kernel[c].empty()) continue;
    const auto& B = b2[c];
    const auto dim = static_cast<Eigen::Index>(B.size());
    Matrix K = Matrix::Zero(dim, static_cast<Eigen::Index>(kernel[c].size()));
    for (std::size_t j = 0; j < kernel[c].size(); ++j) {
      for (const auto& [m, v] : kernel[c][j].terms()) K(B.index_of(m), static_cast<Eigen::Index>(j)) = v;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(K);
    const auto r = qr.rank();
    const Matrix Q = qr.householderQ() * Matrix::Identity(dim, dim);
    auto& blk = P.blocks[c];
    blk.basis = Q.rightCols(dim - r);
    blk.dim = static_cast<int>(dim - r);
  }

  // t I - Sym(L(J z z')) >= 0, J scaled to unit max coefficient
  const auto J = jacobian_polynomials(net, opts.eliminate_slack);
  double mx = 0.0;
  for (const auto& p : J) {
    for (const auto& [m, v] : p.terms()) mx = std::max(mx, std::abs(v));
  }
  if (mx == 0.0) throw InvalidDataError("Jacobian is identically zero");
  sdp.jacobian_scale = 1.0 / mx;
  const int k = L.k;
  std::vector<Polynomial> M(static_cast<std::size_t>(k * k));
  for (int a = 0; a < k; ++a) {
    for (int c = 0; c < k; ++c) {
      const auto& Jac = J[static_cast<std::size_t>(a * k + c)];
      if (Jac.empty()) continue;
      for (int b = 0; b < k; ++b) {
        const auto zz = Polynomial::monomial(Monomial::variable(L.z(c)) * Monomial::variable(L.z(b)));
        M[static_cast<std::size_t>(a * k + b)].add_scaled(Jac * zz, sdp.jacobian_scale);
      }
    }
  }
  std::vector<std::pair<int, int>> pos;
  std::vector<Polynomial> sym;
  for (int a = 0; a < k; ++a) {
    for (int b = a; b < k; ++b) {
      auto p = (M[static_cast<std::size_t>(a * k + b)] + M[static_cast<std::size_t>(b * k + a)]) * 0.5;
      p.prune(1e-15);
      pos.emplace_back(a, b);
      sym.push_back(std::move(p));
    }
  }
  // moments that appear nowhere but here are unconstrained; keep only the span
  // of their coefficient matrices so the Schur complement stays definite
  std::vector<Monomial> free;
  std::unordered_map<std::uint32_t, int> free_index;
  for (const auto& p : sym) {
    for (const auto& [m, v] : sorted_terms(p)) {
      if (!reg.has(m) && free_index.try_emplace(m.key(), static_cast<int>(free.size())).second) free.push_back(m);
    }
  }
  sdp.free_moments = static_cast<int>(free.size());
  PsdBlock lmi;
  lmi.dim = k;
  lmi.label = "lmi";
  Matrix Phi = Matrix::Zero(static_cast<Eigen::Index>(sym.size()), static_cast<Eigen::Index>(free.size()));
  for (std::size_t e = 0; e < sym.size(); ++e) {
    const auto [a, b] = pos[e];
    if (a == b) lmi.entries.push_back({sdp.t_var, a, b, 1.0});
    for (const auto& [m, v] : sorted_terms(sym[e])) {
      if (const auto it = free_index.find(m.key()); it != free_index.end()) {
        Phi(static_cast<Eigen::Index>(e), it->second) = -v;
      } else {
        lmi.entries.push_back({reg.id(m), a, b, -v});
      }
    }
  }
  const int base = 1 + static_cast<int>(sdp.moments.size());
  if (!free.empty()) {
    Eigen::ColPivHouseholderQR<Matrix> qr(Phi);
    qr.setThreshold(1e-12);
    const auto r = qr.rank();
    const Matrix Q = qr.householderQ() * Matrix::Identity(Phi.rows(), r);
    for (Eigen::Index j = 0; j < r; ++j) {
      for (std::size_t e = 0; e < sym.size(); ++e) {
        const double v = Q(static_cast<Eigen::Index>(e), j);
        if (std::abs(v) > 1e-14) {
          lmi.entries.push_back({base + static_cast<int>(j), pos[e].first, pos[e].second, v});
        }
      }
    }
    sdp.free_span_vars = static_cast<int>(r);
  }
  sdp.lmi_block = static_cast<int>(P.blocks.size());
  P.blocks.push_back(std::move(lmi));

  P.num_vars = base + sdp.free_span_vars;
  P.objective = Vector::Zero(P.num_vars);
  P.objective[sdp.t_var] = 1.0;
  for (const auto& m : sdp.moments) sdp.max_monomial_degree = std::max(sdp.max_monomial_degree, m.degree());
  return sdp;
}

SamplingReport verify_by_sampling(const Network& net, double gamma, const Matrix& W, int samples,
                                  std::uint64_t seed) {
  SamplingReport rep;
  rep.min_eig = std::numeric_limits<double>::infinity();
  rep.min_pair = std::numeric_limits<double>::infinity();
  const auto dom = DomainSpec::uniform(net, gamma);
  const DomainSampler sampler(net, dom);
  std::mt19937_64 rng(seed);
  std::optional<ScaledOperator> op;
  try {
    op.emplace(net, InjectionVector::zero(net), W);
  } catch (const ContractViolation&) {
    rep.violations = 1;
    rep.min_eig = 0.0;
    rep.counterexample = Vector::Zero(net.dim());
    return rep;
  }
  for (int i = 0; i < samples; ++i) {
    const Vector x = sampler.draw(rng);
    const double e = jacobian_sym_mineig(net, x, W);
    ++rep.states;
    if (e < rep.min_eig) rep.min_eig = e;
    if (!(e > 0.0)) {
      ++rep.violations;
      if (!rep.counterexample) rep.counterexample = x;
    }
    const Vector y = sampler.draw(rng);
    if ((x - y).norm() == 0.0) continue;
    const double pv = check_monotone_pair(*op, x, y);
    ++rep.pairs;
    rep.min_pair = std::min(rep.min_pair, pv);
    if (!(pv > 0.0)) {
      ++rep.violations;
      if (!rep.counterexample) rep.counterexample = x;
    }
  }
  return rep;
}

CertificationResult certify_gamma(const Network& net, double gamma, const RelaxationOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto sdp = build_moment_sdp(net, gamma, opts);
  const auto sol = solve_conic(sdp.problem, opts.conic);
  auto res = certify_solution(net, gamma, sdp, sol, opts);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

CertificationResult certify_solution(const Network& net, double gamma, const MomentSdp& sdp, const ConicSolution& sol,
                                     const RelaxationOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  CertificationResult res;
  res.gamma = gamma;
  res.status = sol.status;
  res.residuals = verify_solution(sdp.problem, sol);
  res.optimal_value = sol.y.size() > 0 ? sol.y[sdp.t_var] : 0.0;
  // short of full accuracy only the smaller objective is trusted
  if (sol.status == ConicStatus::near_optimal) res.optimal_value = std::min(sol.primal_objective, sol.dual_objective);
  auto finish = [&] {
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
  };
  if (sol.status != ConicStatus::optimal && sol.status != ConicStatus::near_optimal) {
    res.message = std::string("conic solver: ") + to_string(sol.status) + " (" + sol.message + ")";
    // a feasible primal point still bounds the relaxation value from above
    const double tol = opts.conic.near_tol;
    if (sol.y.size() > 0 && res.residuals.primal_equality <= tol && res.residuals.primal_cone <= tol &&
        res.optimal_value <= opts.eps_cert) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "; feasible primal point has t = %.3e, not certifiable", res.optimal_value);
      res.message += buf;
    }
    return finish();
  }
  if (!(res.optimal_value > opts.eps_cert)) {
    res.message = "relaxation value does not exceed the certification threshold";
    return finish();
  }
  Matrix W = sol.X[static_cast<std::size_t>(sdp.lmi_block)];
  W = 0.5 * (W + W.transpose());
  const Eigen::SelfAdjointEigenSolver<Matrix> es(W, Eigen::EigenvaluesOnly);
  W /= es.eigenvalues().cwiseAbs().sum();

  const auto rep = verify_by_sampling(net, gamma, W, opts.verify_samples, opts.verify_seed);
  if (rep.violations > 0) {
    res.counterexample = rep.counterexample;
    res.counterexample_value = rep.min_eig;
    res.message = "sampling found " + std::to_string(rep.violations) + " violations; certificate rejected";
    return finish();
  }
  MonotonicityCertificate cert;
  cert.gamma = gamma;
  cert.W = W;
  cert.optimal_value = res.optimal_value;
  cert.threshold = opts.eps_cert;
  cert.network_name = net.name();
  cert.fingerprint = network_fingerprint(net);
  cert.sparse = opts.sparse;
  cert.eliminate_slack = opts.eliminate_slack;
  for (const auto& c : sdp.cliques.cliques) cert.clique_sizes.push_back(static_cast<int>(c.size()));
  cert.moment_block_dims = sdp.moment_block_dims;
  cert.localizing_block_dims = sdp.localizing_block_dims;
  cert.num_conic_vars = sdp.problem.num_vars;
  cert.num_equalities = static_cast<int>(sdp.problem.equalities.size());
  cert.solver_tol = opts.conic.tol;
  cert.solver_iterations = sol.iterations;
  cert.residuals = res.residuals;
  cert.verified_states = rep.states;
  cert.verified_pairs = rep.pairs;
  cert.verified_min_eig = rep.min_eig;
  res.certificate = std::move(cert);
  res.certified = true;
  res.message = "certified";
  return finish();
}

GammaSearch min_gamma(const Network& net, double tol, const RelaxationOptions& opts, double lo, double hi) {
  if (!(tol > 0.0 && tol <= 0.1)) throw ContractViolation("bisection tolerance must lie in (0, 0.1]");
  if (!(lo > 0.0 && lo < hi && hi <= 1.0)) throw ContractViolation("bisection bracket must satisfy 0 < lo < hi <= 1");
  GammaSearch out;
  auto eval = [&](double g) {
    out.trace.push_back(certify_gamma(net, g, opts));
    return out.trace.back().certified;
  };
  if (!eval(hi)) {
    out.message = "network not certifiable at gamma = " + std::to_string(hi) + ": " + out.trace.back().message;
    return out;
  }
  out.found = true;
  out.gamma_star = hi;
  out.certificate = out.trace.back().certificate;
  if (eval(lo)) {
    out.gamma_star = lo;
    out.certificate = out.trace.back().certificate;
    out.message = "lower end of the bracket certifies";
    return out;
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (eval(mid)) {
      hi = mid;
      out.gamma_star = mid;
      out.certificate = out.trace.back().certificate;
    } else {
      lo = mid;
    }
  }
  out.message = "bisection converged";
  return out;
}

namespace {

json residuals_json(const ResidualReport& r) {
  return {{"primal_equality", r.primal_equality}, {"primal_cone", r.primal_cone},
          {"dual_equality", r.dual_equality},     {"dual_cone", r.dual_cone},
          {"primal_objective", r.primal_objective}, {"dual_objective", r.dual_objective},
          {"gap", r.gap}};
}

}  // namespace

std::string certificate_to_json(const MonotonicityCertificate& c, int indent) {
  json W = json::array();
  for (Eigen::Index i = 0; i < c.W.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < c.W.cols(); ++j) row.push_back(c.W(i, j));
    W.push_back(row);
  }
  json doc = {
      {"format", "monopf-certificate"},
      {"version", MonotonicityCertificate::kVersion},
      {"network", {{"name", c.network_name}, {"fingerprint", c.fingerprint}, {"dim", c.W.rows()}}},
      {"gamma", c.gamma},
      {"optimal_value", c.optimal_value},
      {"threshold", c.threshold},
      {"W", W},
      {"relaxation",
       {{"sparse", c.sparse},
        {"eliminate_slack", c.eliminate_slack},
        {"clique_sizes", c.clique_sizes},
        {"moment_blocks", c.moment_block_dims},
        {"localizing_blocks", c.localizing_block_dims},
        {"conic_variables", c.num_conic_vars},
        {"equalities", c.num_equalities}}},
      {"solver", {{"tolerance", c.solver_tol}, {"iterations", c.solver_iterations}, {"residuals", residuals_json(c.residuals)}}},
      {"verification", {{"states", c.verified_states}, {"pairs", c.verified_pairs}, {"min_eig", c.verified_min_eig}}},
  };
  return doc.dump(indent) + "\n";
}

MonotonicityCertificate certificate_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("certificate: ") + e.what());
  }
  MonotonicityCertificate c;
  try {
    if (doc.at("format").get<std::string>() != "monopf-certificate") throw ParseError("certificate: wrong format tag");
    const int version = doc.at("version").get<int>();
    if (version != MonotonicityCertificate::kVersion) {
      throw ParseError("certificate: unsupported version " + std::to_string(version));
    }
    c.gamma = doc.at("gamma").get<double>();
    c.optimal_value = doc.at("optimal_value").get<double>();
    c.threshold = doc.value("threshold", 0.0);
    const auto& net = doc.at("network");
    c.network_name = net.value("name", "");
    c.fingerprint = net.at("fingerprint").get<std::string>();
    const auto& W = doc.at("W");
    const auto k = static_cast<Eigen::Index>(W.size());
    c.W.resize(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto& row = W.at(static_cast<std::size_t>(i));
      if (static_cast<Eigen::Index>(row.size()) != k) throw ParseError("certificate: W is not square");
      for (Eigen::Index j = 0; j < k; ++j) c.W(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
    }
    if (doc.contains("relaxation")) {
      const auto& r = doc["relaxation"];
      c.sparse = r.value("sparse", true);
      c.eliminate_slack = r.value("eliminate_slack", true);
      c.clique_sizes = r.value("clique_sizes", std::vector<int>{});
      c.moment_block_dims = r.value("moment_blocks", std::vector<int>{});
      c.localizing_block_dims = r.value("localizing_blocks", std::vector<int>{});
      c.num_conic_vars = r.value("conic_variables", 0);
      c.num_equalities = r.value("equalities", 0);
    }
    if (doc.contains("solver")) {
      const auto& s = doc["solver"];
      c.solver_tol = s.value("tolerance", 0.0);
      c.solver_iterations = s.value("iterations", 0);
      if (s.contains("residuals")) {
        const auto& r = s["residuals"];
        c.residuals = {r.value("primal_equality", 0.0), r.value("primal_cone", 0.0),
                       r.value("dual_equality", 0.0),   r.value("dual_cone", 0.0),
                       r.value("primal_objective", 0.0), r.value("dual_objective", 0.0),
                       r.value("gap", 0.0)};
      }
    }
    if (doc.contains("verification")) {
      const auto& v = doc["verification"];
      c.verified_states = v.value("states", 0);
      c.verified_pairs = v.value("pairs", 0);
      c.verified_min_eig = v.value("min_eig", 0.0);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("certificate: ") + e.what());
  }
  if (!c.W.allFinite()) throw ParseError("certificate: W has non-finite entries");
  return c;
}

void save_certificate(const std::string& path, const MonotonicityCertificate& cert) {
  write_file_atomic(path, certificate_to_json(cert));
}

MonotonicityCertificate load_certificate(const std::string& path) { return certificate_from_json(read_file(path)); }

}  // namespace monopf
