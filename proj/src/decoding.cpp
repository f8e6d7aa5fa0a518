// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "jedssl/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "jedssl/frontend.hpp"
#include "jedssl/ops.hpp"

namespace jedssl::decoding {

std::vector<std::int32_t> ctc_greedy_decode(std::span<const double> logits, std::size_t classes, std::int32_t blank) {
    if (classes == 0 || logits.size() % classes != 0) throw std::invalid_argument("ctc_greedy_decode: ragged logits");
    std::vector<std::int32_t> out;
    std::int32_t prev = -1;
    for (std::size_t t = 0; t < logits.size() / classes; ++t) {
        auto row = logits.subspan(t * classes, classes);
        const auto best = static_cast<std::int32_t>(std::max_element(row.begin(), row.end()) - row.begin());
        if (best != prev && best != blank) out.push_back(best);
        prev = best;
    }
    return out;
}

template <class T>
std::vector<std::int32_t> ctc_greedy_decode(const ad::Tensor<T>& logits, std::int32_t blank) {
    if (logits.rank() != 2) throw ad::ShapeError("ctc_greedy_decode: logits must be 2-D, got " + ad::to_string(logits.shape()));
    std::vector<double> values(logits.data().begin(), logits.data().end());
    return ctc_greedy_decode(values, logits.dim(1), blank);
}

bool better(const Hypothesis& a, const Hypothesis& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.tokens.size() != b.tokens.size()) return a.tokens.size() < b.tokens.size();
    return a.tokens < b.tokens;
}

namespace {

struct Active {
    std::vector<std::int32_t> prefix;  // SOS first
    double score = 0.0;
};

Hypothesis as_hypothesis(const Active& a, bool terminated) {
    return {std::vector<std::int32_t>(a.prefix.begin() + 1, a.prefix.end()), a.score, terminated};
}

std::vector<double> checked_scores(const PrefixScorer& scorer, const std::vector<std::int32_t>& prefix, std::size_t vocab) {
    auto lp = scorer(prefix);
    if (lp.size() != vocab) {
        throw std::invalid_argument("beam_search: scorer returned " + std::to_string(lp.size()) + " scores for vocab " +
                                    std::to_string(vocab));
    }
    return lp;
}

Hypothesis run_beam(const PrefixScorer& scorer, std::size_t vocab, const BeamSpec& spec, std::size_t beam) {
    std::vector<Active> active{{{spec.sos}, 0.0}};
    std::vector<Hypothesis> finished;
    std::vector<Hypothesis> capped;
    auto best_finished = [&]() -> const Hypothesis* {
        const Hypothesis* best = nullptr;
        for (const auto& h : finished) {
            if (!best || better(h, *best)) best = &h;
        }
        return best;
    };
    while (!active.empty()) {
        std::vector<Active> next;
        for (const auto& a : active) {
            const auto lp = checked_scores(scorer, a.prefix, vocab);
            const std::size_t emitted = a.prefix.size() - 1;
            for (std::size_t v = 0; v < vocab; ++v) {
                const auto tok = static_cast<std::int32_t>(v);
                if (tok == spec.sos || std::isinf(lp[v])) continue;  // impossible continuations
                Active cand{a.prefix, a.score + lp[v]};
                if (tok == spec.eos) {
                    finished.push_back(as_hypothesis(cand, true));
                } else if (emitted < spec.max_len) {
                    cand.prefix.push_back(tok);
                    next.push_back(std::move(cand));
                }
            }
            if (emitted == spec.max_len) capped.push_back(as_hypothesis(a, false));
        }
        std::sort(next.begin(), next.end(), [](const Active& x, const Active& y) {
            return better(as_hypothesis(x, false), as_hypothesis(y, false));
        });
        if (next.size() > beam) next.resize(beam);
        // Scores only decrease as hypotheses grow.
        if (const auto* f = best_finished(); f && !next.empty() && f->score >= next.front().score) next.clear();
        active = std::move(next);
    }
    if (const auto* f = best_finished()) return *f;
    auto it = std::min_element(capped.begin(), capped.end(), better);
    if (it == capped.end()) throw std::logic_error("beam_search: no hypothesis survived");
    return *it;
}

}  // namespace

Hypothesis beam_search(const PrefixScorer& scorer, std::size_t vocab, const BeamSpec& spec) {
    if (spec.beam_size == 0) throw std::invalid_argument("beam_search: beam_size must be >= 1");
    auto in_vocab = [&](std::int32_t id) { return id >= 0 && static_cast<std::size_t>(id) < vocab; };
    if (!in_vocab(spec.sos) || !in_vocab(spec.eos) || spec.sos == spec.eos) {
        throw std::invalid_argument("beam_search: SOS/EOS must be distinct ids inside the vocabulary");
    }
    Hypothesis greedy = run_beam(scorer, vocab, spec, 1);
    if (spec.beam_size == 1) return greedy;
    Hypothesis wide = run_beam(scorer, vocab, spec, spec.beam_size);
    if (wide.terminated != greedy.terminated) return wide.terminated ? wide : greedy;
    return better(greedy, wide) ? greedy : wide;
}

template <class T>
Hypothesis attention_decode(const ad::ParamStore<T>& params, const model::ModelConfig& cfg,
                            const model::DecoderHeads& heads, const ad::Tensor<T>& encoder_states, std::size_t vocab,
                            const BeamSpec& spec) {
    ad::NoGradGuard no_grad;
    PrefixScorer scorer = [&](const std::vector<std::int32_t>& prefix) {
        auto out = model::decoder_forward<T>(prefix, encoder_states, params, cfg, heads);
        auto last = ad::slice(out.logits, 0, prefix.size() - 1, prefix.size());
        auto lp = ad::log_softmax(last);
        return std::vector<double>(lp.data().begin(), lp.data().end());
    };
    return beam_search(scorer, vocab, spec);
}

namespace {

template <class Seq>
std::size_t levenshtein(const Seq& a, const Seq& b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

}  // namespace

std::size_t edit_distance(std::string_view ref, std::string_view hyp) { return levenshtein(ref, hyp); }

std::size_t edit_distance(std::span<const std::int32_t> ref, std::span<const std::int32_t> hyp) {
    return levenshtein(ref, hyp);
}

double cer(std::span<const std::string> refs, std::span<const std::string> hyps) {
    if (refs.size() != hyps.size()) throw std::invalid_argument("cer: references and hypotheses differ in count");
    std::size_t dist = 0, total = 0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        dist += edit_distance(refs[i], hyps[i]);
        total += refs[i].size();
    }
    if (total == 0) throw std::invalid_argument("cer: total reference length is zero");
    return static_cast<double>(dist) / static_cast<double>(total);
}

std::string to_string(DecoderKind kind) { return kind == DecoderKind::kCtc ? "ctc" : "attention"; }

DecoderKind parse_decoder_kind(const std::string& name) {
    if (name == "ctc") return DecoderKind::kCtc;
    if (name == "attention") return DecoderKind::kAttention;
    throw std::invalid_argument("unknown decoder '" + name + "' (expected ctc or attention)");
}

nlohmann::json to_json(const EvalReport& report) {
    nlohmann::json utts = nlohmann::json::array();
    for (const auto& u : report.utterances) {
        utts.push_back({{"id", u.id}, {"ref", u.ref}, {"hyp", u.hyp}, {"distance", u.distance}, {"terminated", u.terminated}});
    }
    return {{"model_tag", report.model_tag},
            {"split", report.split},
            {"decoder", to_string(report.decoder)},
            {"cer", report.cer},
            {"total_distance", report.total_distance},
            {"total_ref_chars", report.total_ref_chars},
            {"utterances", utts}};
}

template <class T>
EvalReport evaluate(const ad::ParamStore<T>& params, const model::ModelConfig& cfg, std::size_t n_chars,
                    const std::vector<const corpus::Utterance*>& utts, const EvalOptions& opts) {
    EvalReport report;
    report.model_tag = opts.model_tag;
    report.split = opts.split;
    report.decoder = opts.decoder;
    report.utterances.resize(utts.size());
    const auto chars = static_cast<std::int32_t>(n_chars);
    std::vector<std::string> errors(utts.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(utts.size()); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        try {
            ad::NoGradGuard no_grad;
            const auto& u = *utts[idx];
            auto feats = frontend::conv_feature_extractor<T>(u.wave, params, cfg.frontend);
            auto enc = model::encoder_forward<T>(feats.frames, params, cfg);
            std::vector<std::int32_t> ids;
            bool terminated = true;
            if (opts.decoder == DecoderKind::kCtc) {
                // CTC class c + 1 is character c.
                for (auto c : ctc_greedy_decode(model::linear<T>(enc.states, params, model::FinetuneHeads::kCtcHead))) {
                    ids.push_back(c - 1);
                }
            } else {
                BeamSpec spec{opts.beam_size, opts.max_len, chars, chars + 1};
                auto hyp = attention_decode<T>(params, cfg, model::FinetuneHeads::decoder(), enc.states, n_chars + 2, spec);
                ids = std::move(hyp.tokens);
                terminated = hyp.terminated;
            }
            UtteranceResult r;
            r.id = u.id;
            r.ref = u.transcript;
            r.hyp = corpus::transcript_of(ids);
            r.distance = edit_distance(r.ref, r.hyp);
            r.terminated = terminated;
            report.utterances[idx] = std::move(r);
        } catch (const std::exception& e) {
            errors[idx] = e.what();
        }
    }
    for (const auto& e : errors) {
        if (!e.empty()) throw std::runtime_error("evaluate: " + e);
    }
    for (const auto& r : report.utterances) {
        report.total_distance += r.distance;
        report.total_ref_chars += r.ref.size();
    }
    if (report.total_ref_chars == 0) throw std::invalid_argument("cer: total reference length is zero");
    report.cer = static_cast<double>(report.total_distance) / static_cast<double>(report.total_ref_chars);
    return report;
}

template std::vector<std::int32_t> ctc_greedy_decode<float>(const ad::Tensor<float>&, std::int32_t);
template std::vector<std::int32_t> ctc_greedy_decode<double>(const ad::Tensor<double>&, std::int32_t);
template Hypothesis attention_decode<float>(const ad::ParamStore<float>&, const model::ModelConfig&,
                                            const model::DecoderHeads&, const ad::Tensor<float>&, std::size_t,
                                            const BeamSpec&);
template Hypothesis attention_decode<double>(const ad::ParamStore<double>&, const model::ModelConfig&,
                                             const model::DecoderHeads&, const ad::Tensor<double>&, std::size_t,
                                             const BeamSpec&);
template EvalReport evaluate<float>(const ad::ParamStore<float>&, const model::ModelConfig&, std::size_t,
                                    const std::vector<const corpus::Utterance*>&, const EvalOptions&);
template EvalReport evaluate<double>(const ad::ParamStore<double>&, const model::ModelConfig&, std::size_t,
                                     const std::vector<const corpus::Utterance*>&, const EvalOptions&);

}  // namespace jedssl::decoding
