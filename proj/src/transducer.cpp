#include "morsel/transducer.hpp"

#include <cassert>
#include <cmath>

#include "morsel/numeric.hpp"

namespace morsel {

namespace {

void append_core(std::string& s, const EditAction& act) {
  switch (act.kind) {
    case EditKind::Substitute:
      s.push_back('s');
      s.push_back(act.consumed);
      s.push_back(act.emitted);
      break;
    case EditKind::Delete:
      s.push_back('d');
      s.push_back(act.consumed);
      break;
    case EditKind::Insert:
      s.push_back('i');
      s.push_back(act.emitted);
      break;
  }
}

// Fires every feature of one edit action.  anchor is the current surface
// position (the consumed index for Substitute/Delete, the next unconsumed
// index for Insert); prev is the previously emitted canonical character or 0
// at the start.  Each emission has value 1.
template <class Emit>
void emit_action_features(std::string_view w, int anchor, char prev, const EditAction& act,
                          const TransducerFeatureConfig& cfg, std::string& buf, Emit&& emit) {
  if (cfg.action_identity) {
    buf.assign("t:a:");
    append_core(buf, act);
    emit(std::string_view(buf));
  }
  if (cfg.action_previous_output) {
    buf.assign("t:p:");
    append_core(buf, act);
    buf.push_back(':');
    buf.push_back(prev == 0 ? '^' : prev);
    emit(std::string_view(buf));
  }
  if (cfg.action_context) {
    int r = cfg.context_radius;
    for (int o = -r; o <= r; ++o) {
      buf.assign("t:c");
      buf.push_back(static_cast<char>('0' + (o + r)));
      buf.push_back(':');
      append_core(buf, act);
      buf.push_back(':');
      int pos = anchor + o;
      char ctx = pos < 0 ? '^' : (pos >= static_cast<int>(w.size()) ? '$' : w[pos]);
      buf.push_back(ctx);
      emit(std::string_view(buf));
    }
  }
}

double action_log_weight(std::string_view w, int anchor, char prev, const EditAction& act,
                         const TransducerFeatureConfig& cfg, const SparseFeatureVector& weights,
                         std::string& buf) {
  double s = 0.0;
  emit_action_features(w, anchor, prev, act, cfg, buf,
                       [&](std::string_view key) { s += weights.get(key); });
  return s;
}

// Arc log-weights of the (position in u) x (position in w) grid for a fixed
// pair.  lsub/ldel/lins[(i, j)] weight the arc *into* cell (i, j).
struct PairGrid {
  int m = 0, n = 0;
  std::vector<double> lsub, ldel, lins;

  std::size_t at(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n + 1) +
           static_cast<std::size_t>(j);
  }

  PairGrid(std::string_view u, std::string_view w, const SparseFeatureVector& weights,
           const TransducerFeatureConfig& cfg)
      : m(static_cast<int>(u.size())), n(static_cast<int>(w.size())) {
    std::size_t cells = static_cast<std::size_t>(m + 1) * static_cast<std::size_t>(n + 1);
    lsub.assign(cells, kNegInf);
    ldel.assign(cells, kNegInf);
    lins.assign(cells, kNegInf);
    std::string buf;
    for (int i = 0; i <= m; ++i) {
      for (int j = 0; j <= n; ++j) {
        char prev_before_emit = i >= 2 ? u[i - 2] : 0;  // for actions emitting u[i-1]
        if (i >= 1 && j >= 1)
          lsub[at(i, j)] = action_log_weight(w, j - 1, prev_before_emit,
                                             EditAction::substitute(w[j - 1], u[i - 1]), cfg,
                                             weights, buf);
        if (cfg.allow_delete && j >= 1)
          ldel[at(i, j)] = action_log_weight(w, j - 1, i >= 1 ? u[i - 1] : 0,
                                             EditAction::del(w[j - 1]), cfg, weights, buf);
        if (cfg.allow_insert && i >= 1)
          lins[at(i, j)] = action_log_weight(w, j, prev_before_emit,
                                             EditAction::ins(u[i - 1]), cfg, weights, buf);
      }
    }
  }

  std::vector<double> forward() const {
    std::vector<double> lp(lsub.size(), kNegInf);
    lp[at(0, 0)] = 0.0;
    for (int i = 0; i <= m; ++i) {
      for (int j = 0; j <= n; ++j) {
        if (i == 0 && j == 0) continue;
        double v = kNegInf;
        if (i >= 1 && j >= 1) v = log_add(v, lp[at(i - 1, j - 1)] + lsub[at(i, j)]);
        if (j >= 1) v = log_add(v, lp[at(i, j - 1)] + ldel[at(i, j)]);
        if (i >= 1) v = log_add(v, lp[at(i - 1, j)] + lins[at(i, j)]);
        lp[at(i, j)] = v;
      }
    }
    return lp;
  }

  std::vector<double> backward() const {
    std::vector<double> lb(lsub.size(), kNegInf);
    lb[at(m, n)] = 0.0;
    for (int i = m; i >= 0; --i) {
      for (int j = n; j >= 0; --j) {
        if (i == m && j == n) continue;
        double v = kNegInf;
        if (i < m && j < n) v = log_add(v, lb[at(i + 1, j + 1)] + lsub[at(i + 1, j + 1)]);
        if (j < n) v = log_add(v, lb[at(i, j + 1)] + ldel[at(i, j + 1)]);
        if (i < m) v = log_add(v, lb[at(i + 1, j)] + lins[at(i + 1, j)]);
        lb[at(i, j)] = v;
      }
    }
    return lb;
  }
};

void check_budget(std::string_view u, std::string_view w, int insertion_budget) {
  if (u.empty()) throw ValidationError("canonical form is empty");
  if (static_cast<int>(u.size()) > static_cast<int>(w.size()) + insertion_budget)
    throw BudgetError("canonical form longer than surface plus insertion budget");
}

}  // namespace

SparseFeatureVector alignment_features(std::string_view u, const Alignment& a,
                                       std::string_view w, const TransducerFeatureConfig& cfg) {
  if (auto err = validate_alignment(a, u, w))
    throw ValidationError("alignment_features: " + *err);
  SparseFeatureVector g;
  std::string buf;
  int j = 0;
  char prev = 0;
  for (const EditAction& act : a.actions) {
    emit_action_features(w, j, prev, act, cfg, buf,
                         [&](std::string_view key) { g.add(key, 1.0); });
    if (act.kind != EditKind::Insert) ++j;
    if (act.kind != EditKind::Delete) prev = act.emitted;
  }
  return g;
}

double log_score_triple(std::string_view u, const Alignment& a, std::string_view w,
                        const SparseFeatureVector& weights, const TransducerFeatureConfig& cfg) {
  if (auto err = validate_alignment(a, u, w))
    throw ValidationError("log_score_triple: " + *err);
  double s = 0.0;
  std::string buf;
  int j = 0;
  char prev = 0;
  for (const EditAction& act : a.actions) {
    s += action_log_weight(w, j, prev, act, cfg, weights, buf);
    if (act.kind != EditKind::Insert) ++j;
    if (act.kind != EditKind::Delete) prev = act.emitted;
  }
  return s;
}

double score_triple(std::string_view u, const Alignment& a, std::string_view w,
                    const SparseFeatureVector& weights, const TransducerFeatureConfig& cfg) {
  return std::exp(log_score_triple(u, a, w, weights, cfg));
}

double log_pair_score(std::string_view u, std::string_view w, const SparseFeatureVector& weights,
                      int insertion_budget, const TransducerFeatureConfig& cfg) {
  check_budget(u, w, insertion_budget);
  PairGrid grid(u, w, weights, cfg);
  return grid.forward()[grid.at(grid.m, grid.n)];
}

double pair_score(std::string_view u, std::string_view w, const SparseFeatureVector& weights,
                  int insertion_budget, const TransducerFeatureConfig& cfg) {
  return std::exp(log_pair_score(u, w, weights, insertion_budget, cfg));
}

SparseFeatureVector alignment_posterior_features(std::string_view u, std::string_view w,
                                                 const SparseFeatureVector& weights,
                                                 int insertion_budget,
                                                 const TransducerFeatureConfig& cfg) {
  check_budget(u, w, insertion_budget);
  PairGrid grid(u, w, weights, cfg);
  std::vector<double> lp = grid.forward();
  std::vector<double> lb = grid.backward();
  double log_z = lp[grid.at(grid.m, grid.n)];
  if (log_z == kNegInf)
    throw Error("alignment_posterior_features: no admissible alignment under the action gates");
  SparseFeatureVector out;
  std::string buf;
  int m = grid.m, n = grid.n;
  for (int i = 0; i <= m; ++i) {
    for (int j = 0; j <= n; ++j) {
      char prev_before_emit = i >= 2 ? u[i - 2] : 0;
      if (i >= 1 && j >= 1 && lp[grid.at(i - 1, j - 1)] != kNegInf) {
        double post =
            std::exp(lp[grid.at(i - 1, j - 1)] + grid.lsub[grid.at(i, j)] + lb[grid.at(i, j)] -
                     log_z);
        if (post > 0)
          emit_action_features(w, j - 1, prev_before_emit,
                               EditAction::substitute(w[j - 1], u[i - 1]), cfg, buf,
                               [&](std::string_view key) { out.add(key, post); });
      }
      if (cfg.allow_delete && j >= 1 && lp[grid.at(i, j - 1)] != kNegInf) {
        double post = std::exp(lp[grid.at(i, j - 1)] + grid.ldel[grid.at(i, j)] +
                               lb[grid.at(i, j)] - log_z);
        if (post > 0)
          emit_action_features(w, j - 1, i >= 1 ? u[i - 1] : 0, EditAction::del(w[j - 1]), cfg,
                               buf, [&](std::string_view key) { out.add(key, post); });
      }
      if (cfg.allow_insert && i >= 1 && lp[grid.at(i - 1, j)] != kNegInf) {
        double post = std::exp(lp[grid.at(i - 1, j)] + grid.lins[grid.at(i, j)] +
                               lb[grid.at(i, j)] - log_z);
        if (post > 0)
          emit_action_features(w, j, prev_before_emit, EditAction::ins(u[i - 1]), cfg, buf,
                               [&](std::string_view key) { out.add(key, post); });
      }
    }
  }
  return out;
}

EditLattice::EditLattice(std::string_view w, const SparseFeatureVector& weights,
                         const Alphabet& alphabet, int insertion_budget,
                         const TransducerFeatureConfig& cfg)
    : w_(w), alphabet_(alphabet), cfg_(cfg), n_(static_cast<int>(w.size())),
      emax_(static_cast<int>(w.size()) + insertion_budget), sigma_(alphabet.size()) {
  if (insertion_budget < 0) throw ConfigError("insertion budget must be >= 0");

  // Arc weights depend on (surface position, previous output, action) only,
  // so they are shared across the emitted-count dimension.
  int acts = action_count();
  arc_logw_.assign(static_cast<std::size_t>(n_ + 1) * (sigma_ + 1) * acts, kNegInf);
  std::string buf;
  for (int j = 0; j <= n_; ++j) {
    for (int p = 0; p <= sigma_; ++p) {
      char prev = p == 0 ? 0 : alphabet_.at(p - 1);
      if (j < n_) {
        if (cfg_.allow_delete)
          arc_logw_[arc_index(j, p, 0)] =
              action_log_weight(w_, j, prev, EditAction::del(w_[j]), cfg_, weights, buf);
        for (int ci = 0; ci < sigma_; ++ci)
          arc_logw_[arc_index(j, p, 1 + ci)] = action_log_weight(
              w_, j, prev, EditAction::substitute(w_[j], alphabet_.at(ci)), cfg_, weights, buf);
      }
      if (cfg_.allow_insert)
        for (int ci = 0; ci < sigma_; ++ci)
          arc_logw_[arc_index(j, p, 1 + sigma_ + ci)] = action_log_weight(
              w_, j, prev, EditAction::ins(alphabet_.at(ci)), cfg_, weights, buf);
    }
  }

  std::size_t states = state_count();
  alpha_.assign(states, kNegInf);
  beta_.assign(states, kNegInf);

  // Forward: pull over incoming arcs; (j, e) is topological.
  alpha_[state_index(0, 0, 0)] = 0.0;
  for (int j = 0; j <= n_; ++j) {
    for (int e = 0; e <= emax_; ++e) {
      for (int p = 0; p <= sigma_; ++p) {
        if (j == 0 && e == 0) continue;  // start state set above, others unreachable
        double v = kNegInf;
        if (cfg_.allow_delete && j >= 1)
          v = log_add(v, alpha_[state_index(j - 1, e, p)] + arc_logw_[arc_index(j - 1, p, 0)]);
        if (p >= 1 && e >= 1) {
          int ci = p - 1;
          if (j >= 1)
            for (int q = 0; q <= sigma_; ++q)
              v = log_add(v, alpha_[state_index(j - 1, e - 1, q)] +
                                 arc_logw_[arc_index(j - 1, q, 1 + ci)]);
          if (cfg_.allow_insert)
            for (int q = 0; q <= sigma_; ++q)
              v = log_add(v, alpha_[state_index(j, e - 1, q)] +
                                 arc_logw_[arc_index(j, q, 1 + sigma_ + ci)]);
        }
        alpha_[state_index(j, e, p)] = v;
      }
    }
  }

  // Backward: total weight to an accepting state (j = |w|, e >= 1).
  for (int j = n_; j >= 0; --j) {
    for (int e = emax_; e >= 0; --e) {
      for (int p = 0; p <= sigma_; ++p) {
        double v = (j == n_ && e >= 1) ? 0.0 : kNegInf;
        if (cfg_.allow_delete && j < n_)
          v = log_add(v, arc_logw_[arc_index(j, p, 0)] + beta_[state_index(j + 1, e, p)]);
        if (j < n_ && e < emax_)
          for (int ci = 0; ci < sigma_; ++ci)
            v = log_add(v, arc_logw_[arc_index(j, p, 1 + ci)] +
                               beta_[state_index(j + 1, e + 1, 1 + ci)]);
        if (cfg_.allow_insert && e < emax_)
          for (int ci = 0; ci < sigma_; ++ci)
            v = log_add(v, arc_logw_[arc_index(j, p, 1 + sigma_ + ci)] +
                               beta_[state_index(j, e + 1, 1 + ci)]);
        beta_[state_index(j, e, p)] = v;
      }
    }
  }

  log_z_ = beta_[state_index(0, 0, 0)];
}

std::size_t EditLattice::state_count() const {
  return static_cast<std::size_t>(n_ + 1) * static_cast<std::size_t>(emax_ + 1) *
         static_cast<std::size_t>(sigma_ + 1);
}

SparseFeatureVector EditLattice::expected_features() const {
  if (log_z_ == kNegInf) throw Error("expected_features: lattice has no accepting path");
  // Accumulate arc posterior mass per (j, prev, action) slot across the
  // emitted-count dimension, then extract features once per slot.
  std::vector<double> mass(arc_logw_.size(), 0.0);
  for (int j = 0; j <= n_; ++j) {
    for (int e = 0; e <= emax_; ++e) {
      for (int p = 0; p <= sigma_; ++p) {
        double a = alpha_[state_index(j, e, p)];
        if (a == kNegInf) continue;
        if (cfg_.allow_delete && j < n_) {
          std::size_t ai = arc_index(j, p, 0);
          mass[ai] += std::exp(a + arc_logw_[ai] + beta_[state_index(j + 1, e, p)] - log_z_);
        }
        if (j < n_ && e < emax_)
          for (int ci = 0; ci < sigma_; ++ci) {
            std::size_t ai = arc_index(j, p, 1 + ci);
            mass[ai] +=
                std::exp(a + arc_logw_[ai] + beta_[state_index(j + 1, e + 1, 1 + ci)] - log_z_);
          }
        if (cfg_.allow_insert && e < emax_)
          for (int ci = 0; ci < sigma_; ++ci) {
            std::size_t ai = arc_index(j, p, 1 + sigma_ + ci);
            mass[ai] +=
                std::exp(a + arc_logw_[ai] + beta_[state_index(j, e + 1, 1 + ci)] - log_z_);
          }
      }
    }
  }
  SparseFeatureVector out;
  std::string buf;
  for (int j = 0; j <= n_; ++j) {
    for (int p = 0; p <= sigma_; ++p) {
      char prev = p == 0 ? 0 : alphabet_.at(p - 1);
      for (int a = 0; a < action_count(); ++a) {
        double m = mass[arc_index(j, p, a)];
        if (m <= 0) continue;
        EditAction act = a == 0 ? EditAction::del(j < n_ ? w_[j] : 0)
                         : a <= sigma_
                             ? EditAction::substitute(j < n_ ? w_[j] : 0, alphabet_.at(a - 1))
                             : EditAction::ins(alphabet_.at(a - 1 - sigma_));
        emit_action_features(w_, j, prev, act, cfg_, buf,
                             [&](std::string_view key) { out.add(key, m); });
      }
    }
  }
  return out;
}

CanonicalSample EditLattice::sample(Rng& rng) const {
  if (log_z_ == kNegInf) throw Error("sample: lattice has no accepting path");
  CanonicalSample out;
  int j = 0, e = 0, p = 0;
  std::vector<double> logw;
  struct Choice {
    int kind;  // 0 stop, 1 delete, 2 substitute, 3 insert
    int ci;
  };
  std::vector<Choice> choices;
  for (;;) {
    logw.clear();
    choices.clear();
    if (j == n_ && e >= 1) {
      logw.push_back(0.0);
      choices.push_back({0, 0});
    }
    if (cfg_.allow_delete && j < n_) {
      logw.push_back(arc_logw_[arc_index(j, p, 0)] + beta_[state_index(j + 1, e, p)]);
      choices.push_back({1, 0});
    }
    if (j < n_ && e < emax_)
      for (int ci = 0; ci < sigma_; ++ci) {
        logw.push_back(arc_logw_[arc_index(j, p, 1 + ci)] +
                       beta_[state_index(j + 1, e + 1, 1 + ci)]);
        choices.push_back({2, ci});
      }
    if (cfg_.allow_insert && e < emax_)
      for (int ci = 0; ci < sigma_; ++ci) {
        logw.push_back(arc_logw_[arc_index(j, p, 1 + sigma_ + ci)] +
                       beta_[state_index(j, e + 1, 1 + ci)]);
        choices.push_back({3, ci});
      }
    double here = beta_[state_index(j, e, p)];
    std::size_t pick = sample_log_categorical(logw, rng);
    out.log_path_probability += logw[pick] - here;
    const Choice& ch = choices[pick];
    if (ch.kind == 0) break;
    if (ch.kind == 1) {
      out.alignment.actions.push_back(EditAction::del(w_[j]));
      ++j;
    } else if (ch.kind == 2) {
      char c = alphabet_.at(ch.ci);
      out.alignment.actions.push_back(EditAction::substitute(w_[j], c));
      out.canonical.push_back(c);
      ++j, ++e;
      p = 1 + ch.ci;
    } else {
      char c = alphabet_.at(ch.ci);
      out.alignment.actions.push_back(EditAction::ins(c));
      out.canonical.push_back(c);
      ++e;
      p = 1 + ch.ci;
    }
  }
  return out;
}

double log_transducer_partition(std::string_view w, const SparseFeatureVector& weights,
                                const Alphabet& alphabet, int insertion_budget,
                                const TransducerFeatureConfig& cfg) {
  return EditLattice(w, weights, alphabet, insertion_budget, cfg).log_partition();
}

double transducer_partition(std::string_view w, const SparseFeatureVector& weights,
                            const Alphabet& alphabet, int insertion_budget,
                            const TransducerFeatureConfig& cfg) {
  return std::exp(log_transducer_partition(w, weights, alphabet, insertion_budget, cfg));
}

SparseFeatureVector lattice_expected_features(std::string_view w,
                                              const SparseFeatureVector& weights,
                                              const Alphabet& alphabet, int insertion_budget,
                                              const TransducerFeatureConfig& cfg) {
  return EditLattice(w, weights, alphabet, insertion_budget, cfg).expected_features();
}

CanonicalSample sample_canonical(std::string_view w, const SparseFeatureVector& weights,
                                 const Alphabet& alphabet, int insertion_budget,
                                 const TransducerFeatureConfig& cfg, std::uint64_t seed) {
  EditLattice lattice(w, weights, alphabet, insertion_budget, cfg);
  Rng rng(seed);
  return lattice.sample(rng);
}

}  // namespace morsel
