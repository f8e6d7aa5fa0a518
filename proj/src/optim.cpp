// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "jedssl/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace jedssl::ad {

template <class T>
Tensor<T>& ParamStore<T>::add(const std::string& name, Tensor<T> tensor) {
    if (contains(name)) throw std::invalid_argument("ParamStore: duplicate parameter name '" + name + "'");
    names_.push_back(name);
    return index_.emplace(name, std::move(tensor)).first->second;
}

template <class T>
const Tensor<T>& ParamStore<T>::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParamStore: no parameter named '" + name + "'");
    return it->second;
}

template <class T>
Tensor<T>& ParamStore<T>::get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParamStore: no parameter named '" + name + "'");
    return it->second;
}

template <class T>
void ParamStore<T>::erase_prefix(const std::string& prefix) {
    std::erase_if(names_, [&](const std::string& n) { return n.starts_with(prefix); });
    std::erase_if(index_, [&](const auto& kv) { return kv.first.starts_with(prefix); });
}

template <class T>
std::size_t ParamStore<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : index_) n += t.numel();
    return n;
}

template <class T>
void ParamStore<T>::zero_grad() {
    for (auto& [name, t] : index_) t.zero_grad();
}

template <class T>
void ParamStore<T>::set_requires_grad_prefix(const std::string& prefix, bool on) {
    for (auto& [name, t] : index_) {
        if (name.starts_with(prefix)) t.set_requires_grad(on);
    }
}

template <class T>
void adam_step(ParamStore<T>& params, AdamState<T>& state, double lr) {
    if (!(lr > 0.0)) throw std::invalid_argument("adam_step: learning rate must be positive");
    for (const auto& name : params.names()) {
        const auto& p = params.get(name);
        if (!p.requires_grad() || !p.has_grad()) continue;
        for (T g : p.grad()) {
            if (!std::isfinite(g)) throw NumericalError("adam_step: non-finite gradient in parameter '" + name + "'");
        }
    }
    state.step += 1;
    const auto& h = state.hyper;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(h.beta1, t);
    const double bc2 = 1.0 - std::pow(h.beta2, t);
    for (const auto& name : params.names()) {
        auto& p = params.get(name);
        if (!p.requires_grad() || !p.has_grad()) continue;
        auto& m = state.first_moment[name];
        auto& v = state.second_moment[name];
        if (m.size() != p.numel()) m.assign(p.numel(), T(0));
        if (v.size() != p.numel()) v.assign(p.numel(), T(0));
        auto w = p.mutable_data();
        auto g = p.grad();
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = static_cast<T>(h.beta1 * m[i] + (1.0 - h.beta1) * g[i]);
            v[i] = static_cast<T>(h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i]);
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            w[i] = static_cast<T>(w[i] - lr * mhat / (std::sqrt(vhat) + h.epsilon));
        }
    }
}

double lr_at_step(const WarmupSchedule& sched, std::uint64_t step) {
    if (step == 0) throw std::invalid_argument("lr_at_step: steps count from 1");
    if (sched.warmup_steps == 0 || !(sched.peak_lr > 0.0)) {
        throw std::invalid_argument("lr_at_step: schedule needs peak_lr > 0 and warmup_steps > 0");
    }
    const double s = static_cast<double>(step);
    const double w = static_cast<double>(sched.warmup_steps);
    return sched.peak_lr * std::min(s / w, std::sqrt(w / s));
}

template class ParamStore<float>;
template class ParamStore<double>;
template void adam_step<float>(ParamStore<float>&, AdamState<float>&, double);
template void adam_step<double>(ParamStore<double>&, AdamState<double>&, double);

}  // namespace jedssl::ad
