#include "dfgan/adam.h"

#include <cmath>

#include "dfgan/errors.h"

namespace dfgan {

AdamState AdamState::for_store(const ParamStore& params) {
  AdamState s;
  for (const auto& e : params.entries()) {
    s.m.push_back(RealMatrix::Zero(e.value.rows(), e.value.cols()));
    s.v.push_back(RealMatrix::Zero(e.value.rows(), e.value.cols()));
  }
  return s;
}

void adam_step(ParamStore& params, AdamState& state, const AdamConfig& cfg, Direction direction) {
  if (state.m.size() != params.size()) state = AdamState::for_store(params);

  const std::uint64_t t = state.step + 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  const double sign = direction == Direction::ascend ? 1.0 : -1.0;

  std::vector<RealMatrix> m_next(params.size());
  std::vector<RealMatrix> v_next(params.size());
  std::vector<RealMatrix> updates(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamEntry& e = params.entry(i);
    if (!e.trainable) continue;
    m_next[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * e.grad;
    v_next[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * e.grad.cwiseAbs2();
    updates[i] = (sign * cfg.lr) *
                 ((m_next[i].array() / c1) / ((v_next[i].array() / c2).sqrt() + cfg.eps)).matrix();
    if (!updates[i].allFinite()) {
      throw NumericError("adam_step: non-finite update for parameter '" + e.name + "'");
    }
  }

  for (std::size_t i = 0; i < params.size(); ++i) {
    ParamEntry& e = params.entry(i);
    if (!e.trainable) continue;
    e.value += updates[i];
    state.m[i] = std::move(m_next[i]);
    state.v[i] = std::move(v_next[i]);
  }
  state.step = t;
  params.mark_modified();
  params.zero_grad();
}

}  // namespace dfgan
