// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Named parameter storage, Adam, and the warmup learning-rate schedule.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "jedssl/tensor.hpp"

namespace jedssl::ad {

// Insertion-ordered set of named leaf tensors. Iteration order is the order
// parameters were registered, which fixes checkpoint layout and update order.
template <class T>
class ParamStore {
   public:
    Tensor<T>& add(const std::string& name, Tensor<T> tensor);
    const Tensor<T>& get(const std::string& name) const;
    Tensor<T>& get(const std::string& name);
    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    void erase_prefix(const std::string& prefix);

    const std::vector<std::string>& names() const { return names_; }
    std::size_t size() const { return names_.size(); }
    std::size_t parameter_count() const;

    void zero_grad();
    void set_requires_grad_prefix(const std::string& prefix, bool on);

   private:
    std::vector<std::string> names_;
    std::map<std::string, Tensor<T>> index_;
};

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.98;
    double epsilon = 1e-8;
};

template <class T>
struct AdamState {
    AdamHyper hyper;
    std::uint64_t step = 0;
    std::map<std::string, std::vector<T>> first_moment;
    std::map<std::string, std::vector<T>> second_moment;
};

// One bias-corrected Adam update over every parameter that requires grad.
// Throws NumericalError naming the parameter if its gradient is not finite.
template <class T>
void adam_step(ParamStore<T>& params, AdamState<T>& state, double lr);

struct WarmupSchedule {
    double peak_lr = 1e-3;
    std::uint64_t warmup_steps = 500;
};

// peak_lr * min(step / warmup, sqrt(warmup / step)); step counts from 1.
double lr_at_step(const WarmupSchedule& sched, std::uint64_t step);

extern template class ParamStore<float>;
extern template class ParamStore<double>;

}  // namespace jedssl::ad
