#include "iag/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "iag/core/errors.hpp"
#include "iag/core/parallel.hpp"
#include "iag/core/text.hpp"

namespace iag {

namespace {

ImageRef image_of(const VqaSample& sample) {
    if (sample.image_ref.empty()) return std::nullopt;
    return sample.image_ref;
}

json segment_ref(const ScoredSegment& s) {
    return json{{"site_url", s.segment.site_url}, {"index", s.segment.index}, {"score", s.score}};
}

json flags_json(const Diagnostics& diag) {
    json out = json::array();
    for (const auto& f : diag.flags()) out.push_back({{"stage", f.stage}, {"message", f.message}});
    return out;
}

double cosine(const Vector& a, const Vector& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

template <typename Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const RetrievalEmpty&) {
        throw;
    } catch (const EmptyContext&) {
        throw;
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

// Top-K segments by cosine similarity to the question text, the image, or
// the mean of both similarities; ties keep document order.
std::vector<ScoredSegment> similarity_select(const VqaSample& sample, const Gathered& gathered, Strategy strategy,
                                             std::size_t k, const Backends& backends, std::size_t workers) {
    std::vector<ScoredSegment> all;
    for (const auto& doc : gathered.retrieval.docs) {
        for (const auto& seg : doc.segments) all.push_back({seg, QuantizedScore{}, 'F'});
    }
    if (all.empty()) throw EmptyContext("no fetched segments");
    if (!backends.embedder) throw PreconditionError("similarity strategies need an embedder");
    const auto& embedder = *backends.embedder;

    std::optional<Vector> q_vec, v_vec;
    if (strategy != Strategy::sim_v) q_vec = embedder.embed(EmbedInput::text(sample.question));
    if (strategy != Strategy::sim_q) {
        if (sample.image_ref.empty()) throw PreconditionError("sample has no image for visual similarity");
        v_vec = embedder.embed(EmbedInput::image(sample.image_ref));
    }
    auto sims = parallel_map(all.size(), workers, [&](std::size_t i) {
        Vector e = embedder.embed(EmbedInput::text(all[i].segment.text));
        if (q_vec && v_vec) return (cosine(e, *q_vec) + cosine(e, *v_vec)) / 2.0;
        return cosine(e, q_vec ? *q_vec : *v_vec);
    });
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sims[a] > sims[b]; });
    std::vector<ScoredSegment> out;
    for (std::size_t i = 0; i < order.size() && i < k; ++i) out.push_back(all[order[i]]);
    return out;
}

std::string percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v * 100.0);
    return buf;
}

std::size_t inner_workers(const PipelineConfig& config, std::size_t samples) {
    return samples > 1 ? 1 : std::max<std::size_t>(config.workers, 1);
}

}  // namespace

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::raw: return "raw";
        case Strategy::sim_q: return "sim_q";
        case Strategy::sim_v: return "sim_v";
        case Strategy::sim_qv: return "sim_qv";
        case Strategy::ours_topk: return "ours_topk";
        case Strategy::ours_div: return "ours_div";
        case Strategy::gt_segment: return "gt_segment";
    }
    return "?";
}

Strategy parse_strategy(std::string_view s) {
    for (auto v : kAllStrategies) {
        if (to_string(v) == s) return v;
    }
    throw ParseError("unknown strategy '" + std::string(s) + "'");
}

Gathered gather(const VqaSample& sample, const PipelineConfig& config, const Backends& backends, std::size_t workers,
                Diagnostics* diag) {
    Gathered g;
    in_stage("querygen", [&] {
        QuestionQueries qq;
        try {
            if (!backends.query_llm) throw PreconditionError("no query model configured");
            qq = gen_question_queries(sample.question, *backends.query_llm);
        } catch (const PreconditionError&) {
            throw;
        } catch (const std::exception& e) {
            flag(diag, "querygen", std::string("question query generation failed: ") + e.what());
            qq.queries = {Query(collapse_whitespace(sample.question), QueryOrigin::question)};
            qq.fell_back = true;
        }
        if (qq.fell_back) flag(diag, "querygen", "using the question itself as the query");
        std::vector<Query> image_queries;
        if (backends.visual && !sample.image_ref.empty()) {
            image_queries = gen_image_queries(sample.image_ref, *backends.visual, config.image_query_support, diag);
        }
        g.bundle = make_bundle(std::move(qq.queries), std::move(image_queries));
        g.queries_fell_back = qq.fell_back;
        return 0;
    });

    try {
        in_stage("retrieval", [&] {
            PipelineConfig c = config;
            c.workers = workers;
            g.retrieval = retrieve(g.bundle, *backends.search, *backends.fetcher, c, diag);
            return 0;
        });
        g.empty = false;
    } catch (const RetrievalEmpty& e) {
        flag(diag, "retrieval", std::string("retrieval empty, answering without context: ") + e.what());
    }
    return g;
}

Filtered filter(const VqaSample& sample, const Gathered& gathered, const PipelineConfig& config,
                const Backends& backends, std::size_t workers, Diagnostics* diag) {
    return in_stage("hierfilter", [&] {
        Filtered f;
        DocIndex docs = index_docs(gathered.retrieval.docs);
        f.websites = score_websites(gathered.retrieval.hits, docs, sample, *backends.website_scorer,
                                    config.snippet_policy, workers, diag);
        if (f.websites.empty()) throw EmptyContext("every website was discarded");
        f.selection = select_websites(f.websites, config.website_budget, docs);
        auto scored = score_segments(f.selection.docs, sample, *backends.content_scorer, workers, diag);
        f.segments_scored = scored.size();
        if (scored.empty()) throw EmptyContext("selected websites have no segments");
        f.top = select_top_segments(scored, config.segment_cut);
        return f;
    });
}

PipelineRun run_pipeline(const VqaSample& sample, const PipelineConfig& config, const Backends& backends,
                         Strategy strategy) {
    config.validate();
    const std::size_t workers = std::max<std::size_t>(config.workers, 1);
    Diagnostics diag;
    PipelineRun run;
    json stages = json::array();
    auto stage = [&](const char* name, json detail) {
        detail["stage"] = name;
        stages.push_back(std::move(detail));
    };

    const bool needs_retrieval = strategy != Strategy::raw && strategy != Strategy::gt_segment;
    Gathered g;
    if (needs_retrieval) {
        g = gather(sample, config, backends, workers, &diag);
        json qg{{"question_queries", json::array()}, {"image_queries", json::array()},
                {"fell_back", g.queries_fell_back}};
        for (const auto& q : g.bundle.question_queries) qg["question_queries"].push_back(q.text());
        for (const auto& q : g.bundle.image_queries) qg["image_queries"].push_back(q.text());
        stage("querygen", std::move(qg));

        json rt{{"empty", g.empty}, {"hits", json::array()}, {"unavailable", json::array()}};
        for (const auto& h : g.retrieval.hits) {
            rt["hits"].push_back({{"url", h.url}, {"rank", h.rank}, {"query", h.query_origin.text()}});
        }
        for (const auto& d : g.retrieval.docs) {
            if (!d.available()) rt["unavailable"].push_back(d.hit.url);
        }
        stage("retrieval", std::move(rt));
    } else {
        stage("querygen", json{{"skipped", to_string(strategy)}});
        stage("retrieval", json{{"skipped", to_string(strategy)}});
    }

    std::vector<ScoredSegment> selected;
    json hf{{"skipped", to_string(strategy)}};
    json dv{{"skipped", to_string(strategy)}};
    try {
        if (strategy == Strategy::gt_segment) {
            if (!sample.gt_segment) throw EmptyContext("sample has no ground-truth segment");
            selected.push_back({*sample.gt_segment, QuantizedScore::from_fifths(5), 'A'});
        } else if (needs_retrieval && g.empty) {
            throw EmptyContext("nothing retrieved");
        } else if (strategy == Strategy::sim_q || strategy == Strategy::sim_v || strategy == Strategy::sim_qv) {
            selected = in_stage("diversity", [&] {
                return similarity_select(sample, g, strategy, config.cluster_count, backends, workers);
            });
            dv = json{{"similarity", to_string(strategy)}, {"k", config.cluster_count}, {"selected", json::array()}};
            for (const auto& s : selected) dv["selected"].push_back(segment_ref(s));
        } else if (needs_retrieval) {
            Filtered f = filter(sample, g, config, backends, workers, &diag);
            run.processed_tokens = f.selection.processed_tokens;
            run.total_tokens = f.selection.total_tokens;
            hf = json{{"websites", json::array()},
                      {"kept_sites", json::array()},
                      {"processed_tokens", f.selection.processed_tokens},
                      {"total_tokens", f.selection.total_tokens},
                      {"segments_scored", f.segments_scored},
                      {"top_segments", json::array()}};
            for (const auto& w : f.websites) {
                hf["websites"].push_back(
                    {{"url", w.hit.url}, {"letter", std::string(1, w.raw_letter)}, {"score", w.score}});
            }
            for (const auto& d : f.selection.docs) hf["kept_sites"].push_back(d.hit.url);
            for (const auto& s : f.top) hf["top_segments"].push_back(segment_ref(s));

            if (strategy == Strategy::ours_topk) {
                selected = select_top_segments(f.top, config.cluster_count);
                dv = json{{"mode", "top_k"}, {"k", config.cluster_count}, {"selected", json::array()}};
            } else {
                DiverseSelection ds = in_stage("diversity", [&] {
                    return select_diverse(f.top, config.cluster_count, *backends.embedder, config.rng_seed, workers,
                                          &diag);
                });
                selected = std::move(ds.selected);
                dv = json{{"mode", "div_k"},
                          {"k", config.cluster_count},
                          {"seed", config.rng_seed},
                          {"fell_back", ds.fell_back},
                          {"iterations", ds.clusters ? ds.clusters->iterations : 0},
                          {"cluster_sizes", ds.clusters ? json(ds.clusters->cluster_sizes()) : json::array()},
                          {"selected", json::array()}};
            }
            for (const auto& s : selected) dv["selected"].push_back(segment_ref(s));
        }
        if (strategy != Strategy::raw) run.context = stitch(selected);
    } catch (const EmptyContext& e) {
        flag(&diag, "augment", std::string("empty context, answering without retrieval: ") + e.what());
        run.context.clear();
    }
    stage("hierfilter", std::move(hf));
    stage("diversity", std::move(dv));

    if (!backends.answerer) throw StageError("augment", "no answering model configured");
    run.answer = answer_sample(sample, run.context, *backends.answerer, config.include_option_e, &diag);
    stage("augment", json{{"context", run.context}, {"answer", run.answer}});

    run.trace = json{{"sample_id", sample.id},
                     {"strategy", to_string(strategy)},
                     {"config", config},
                     {"stages", std::move(stages)},
                     {"flags", flags_json(diag)}};
    return run;
}

EvalReport evaluate(const std::vector<VqaSample>& samples, Strategy strategy, const PipelineConfig& config,
                    const Backends& backends) {
    config.validate();
    EvalReport report;
    report.strategy = strategy;
    report.config = config;

    std::vector<const VqaSample*> usable;
    for (const auto& s : samples) {
        if (s.gt_letter) {
            usable.push_back(&s);
        } else {
            ++report.n_skipped;
            report.flags.push_back({"eval", s.id + ": no ground-truth letter, skipped"});
        }
    }

    PipelineConfig inner = config;
    inner.workers = inner_workers(config, usable.size());
    auto runs = parallel_map(usable.size(), config.workers,
                             [&](std::size_t i) { return run_pipeline(*usable[i], inner, backends, strategy); });

    for (std::size_t i = 0; i < runs.size(); ++i) {
        const VqaSample& s = *usable[i];
        const bool ok = runs[i].answer.correct.value_or(false);
        ++report.n_samples;
        report.n_correct += ok;
        if (s.category) {
            auto& c = report.per_category[*s.category];
            ++c.n;
            c.correct += ok;
        } else {
            ++report.uncategorized;
        }
        report.processed_tokens += runs[i].processed_tokens;
        report.total_tokens += runs[i].total_tokens;
        for (const auto& f : runs[i].trace["flags"]) {
            report.flags.push_back({f["stage"].get<std::string>(), s.id + ": " + f["message"].get<std::string>()});
        }
        report.records.push_back(std::move(runs[i].answer));
    }
    report.overall_accuracy =
        report.n_samples ? static_cast<double>(report.n_correct) / static_cast<double>(report.n_samples) : 0.0;
    return report;
}

json report_json(const EvalReport& report, bool with_records) {
    json per = json::object();
    for (auto c : kAllCategories) {
        auto it = report.per_category.find(c);
        if (it == report.per_category.end()) continue;
        per[std::string(to_string(c))] = {{"n", it->second.n}, {"accuracy", it->second.accuracy()}};
    }
    json j{{"strategy", to_string(report.strategy)},
           {"n_samples", report.n_samples},
           {"n_skipped", report.n_skipped},
           {"n_correct", report.n_correct},
           {"overall_accuracy", report.overall_accuracy},
           {"per_category", std::move(per)},
           {"uncategorized", report.uncategorized},
           {"processed_tokens", report.processed_tokens},
           {"total_tokens", report.total_tokens},
           {"config", report.config}};
    if (with_records) j["records"] = report.records;
    return j;
}

std::string report_table(const std::vector<EvalReport>& reports) {
    std::vector<std::string> header{"strategy"};
    for (auto c : kAllCategories) header.emplace_back(short_label(c));
    header.emplace_back("overall");

    std::vector<std::vector<std::string>> rows{header};
    for (const auto& r : reports) {
        std::vector<std::string> row{std::string(to_string(r.strategy))};
        for (auto c : kAllCategories) {
            auto it = r.per_category.find(c);
            row.push_back(it == r.per_category.end() || it->second.n == 0 ? "-" : percent(it->second.accuracy()));
        }
        row.push_back(percent(r.overall_accuracy));
        rows.push_back(std::move(row));
    }

    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
    }
    std::ostringstream out;
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i == 0) {
                out << row[i] << std::string(width[i] - row[i].size(), ' ');
            } else {
                out << "  " << std::string(width[i] - row[i].size(), ' ') << row[i];
            }
        }
        out << '\n';
    }
    return out.str();
}

ThetaSweep theta_sweep(const std::vector<VqaSample>& samples, const std::vector<double>& thetas,
                       const PipelineConfig& config, const Backends& backends) {
    config.validate();
    for (double t : thetas) {
        if (!(t > 0.0 && t <= 1.0)) throw ParameterError("theta must be in (0, 1]");
    }
    struct PerSample {
        std::vector<std::size_t> processed, total;
        std::vector<bool> correct;
    };
    std::vector<const VqaSample*> usable;
    for (const auto& s : samples) {
        if (s.gt_letter) usable.push_back(&s);
    }

    auto per = parallel_map(usable.size(), config.workers, [&](std::size_t i) {
        const VqaSample& sample = *usable[i];
        Diagnostics diag;
        PerSample r;
        Gathered g = gather(sample, config, backends, 1, &diag);
        for (double t : thetas) {
            PipelineConfig c = config;
            c.website_budget = TokenFraction{t};
            std::string context;
            std::size_t processed = 0, total = 0;
            try {
                if (g.empty) throw EmptyContext("nothing retrieved");
                Filtered f = filter(sample, g, c, backends, 1, &diag);
                processed = f.selection.processed_tokens;
                total = f.selection.total_tokens;
                auto ds = select_diverse(f.top, c.cluster_count, *backends.embedder, c.rng_seed, 1, &diag);
                context = stitch(ds.selected);
            } catch (const EmptyContext&) {
                context.clear();
            }
            auto rec = answer_sample(sample, context, *backends.answerer, c.include_option_e, &diag);
            r.processed.push_back(processed);
            r.total.push_back(total);
            r.correct.push_back(rec.correct.value_or(false));
        }
        return r;
    });

    ThetaSweep sweep;
    for (std::size_t t = 0; t < thetas.size(); ++t) {
        std::size_t processed = 0, total = 0, correct = 0;
        for (const auto& r : per) {
            processed += r.processed[t];
            total += r.total[t];
            correct += r.correct[t];
        }
        ThetaRow row;
        row.theta = thetas[t];
        row.processed_percent = total ? 100.0 * static_cast<double>(processed) / static_cast<double>(total) : 0.0;
        row.accuracy = per.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(per.size());
        sweep.rows.push_back(row);
    }

    std::vector<std::size_t> order(thetas.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return thetas[a] < thetas[b]; });
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (sweep.rows[order[i]].processed_percent + 1e-9 < sweep.rows[order[i - 1]].processed_percent) {
            sweep.tokens_monotonic = false;
        }
    }
    return sweep;
}

std::vector<CompareRow> compare_topk_div(const std::vector<VqaSample>& samples, const std::vector<std::size_t>& ks,
                                         const PipelineConfig& config, const Backends& backends) {
    config.validate();
    if (ks.empty()) return {};
    for (auto k : ks) {
        if (k == 0) throw ParameterError("K must be at least 1");
        if (k > config.segment_cut) throw ParameterError("K must not exceed the segment cut M");
    }
    std::vector<const VqaSample*> usable;
    for (const auto& s : samples) {
        if (s.gt_letter) usable.push_back(&s);
    }

    struct PerSample {
        std::vector<bool> topk, div;
    };
    auto per = parallel_map(usable.size(), config.workers, [&](std::size_t i) {
        const VqaSample& sample = *usable[i];
        Diagnostics diag;
        PerSample r;
        Gathered g = gather(sample, config, backends, 1, &diag);
        std::optional<Filtered> f;
        if (!g.empty) {
            try {
                f = filter(sample, g, config, backends, 1, &diag);
            } catch (const EmptyContext&) {
            }
        }
        auto answer = [&](const std::vector<ScoredSegment>& sel) {
            std::string context = sel.empty() ? std::string() : stitch(sel);
            return answer_sample(sample, context, *backends.answerer, config.include_option_e, &diag)
                .correct.value_or(false);
        };
        for (auto k : ks) {
            std::vector<ScoredSegment> top, div;
            if (f) {
                top = select_top_segments(f->top, k);
                div = select_diverse(f->top, k, *backends.embedder, config.rng_seed, 1, &diag).selected;
            }
            r.topk.push_back(answer(top));
            r.div.push_back(answer(div));
        }
        return r;
    });

    std::vector<CompareRow> rows;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        std::size_t t = 0, d = 0;
        for (const auto& r : per) {
            t += r.topk[i];
            d += r.div[i];
        }
        double n = per.empty() ? 1.0 : static_cast<double>(per.size());
        rows.push_back({ks[i], static_cast<double>(t) / n, static_cast<double>(d) / n});
    }
    return rows;
}

json to_json(const ThetaSweep& sweep) {
    json rows = json::array();
    for (const auto& r : sweep.rows) {
        rows.push_back({{"theta", r.theta}, {"processed_percent", r.processed_percent}, {"accuracy", r.accuracy}});
    }
    return json{{"rows", std::move(rows)}, {"tokens_monotonic", sweep.tokens_monotonic}};
}

json to_json(const std::vector<CompareRow>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        out.push_back({{"k", r.k}, {"topk_accuracy", r.topk_accuracy}, {"div_accuracy", r.div_accuracy}});
    }
    return out;
}

std::string sweep_table(const ThetaSweep& sweep) {
    std::ostringstream out;
    out << "theta  tokens%  accuracy\n";
    for (const auto& r : sweep.rows) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%5.2f  %7.1f  %8.1f\n", r.theta, r.processed_percent, r.accuracy * 100.0);
        out << buf;
    }
    return out.str();
}

std::string compare_table(const std::vector<CompareRow>& rows) {
    std::ostringstream out;
    out << "  K  top-k%   div-k%\n";
    for (const auto& r : rows) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%3zu  %6.1f  %7.1f\n", r.k, r.topk_accuracy * 100.0, r.div_accuracy * 100.0);
        out << buf;
    }
    return out.str();
}

}  // namespace iag
