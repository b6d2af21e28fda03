#include "iag/datagen.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "iag/augment.hpp"
#include "iag/core/errors.hpp"
#include "iag/core/jsonl.hpp"
#include "iag/core/parallel.hpp"
#include "iag/core/rng.hpp"
#include "iag/core/text.hpp"
#include "iag/diversity.hpp"
#include "iag/retrieval.hpp"

namespace iag {

namespace {

bool is_leap(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

int days_in_month(int y, int m) {
    static constexpr int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && is_leap(y) ? 29 : days[m - 1];
}

int parse_digits(std::string_view s) {
    int v = 0;
    for (char c : s) {
        if (!std::isdigit(static_cast<unsigned char>(c))) throw ParseError("bad date '" + std::string(s) + "'");
        v = v * 10 + (c - '0');
    }
    return v;
}

void read_query_lines(std::istream& in, QuerySource source, std::vector<TrendQuery>& out, std::set<std::string>& seen,
                      Diagnostics* diag) {
    std::string line;
    std::size_t lineno = 0;
    const std::string label(to_string(source));
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto sp = t.find_first_of(" \t");
        try {
            if (sp == std::string_view::npos) throw ParseError("missing query text");
            TrendQuery q;
            q.date = Date::parse(t.substr(0, sp));
            q.text = collapse_whitespace(t.substr(sp + 1));
            q.source = source;
            if (q.text.empty()) throw ParseError("missing query text");
            if (seen.insert(to_lower(q.text)).second) out.push_back(std::move(q));
        } catch (const ParseError& e) {
            flag(diag, "datagen", label + " line " + std::to_string(lineno) + " skipped: " + e.what());
        }
    }
}

// Text following `marker` up to the earliest of `stops`, whitespace-collapsed.
std::optional<std::string> field(const std::string& reply, std::string_view marker,
                                 std::initializer_list<std::string_view> stops) {
    auto pos = ifind(reply, marker);
    if (pos == std::string::npos) return std::nullopt;
    auto begin = pos + marker.size();
    auto end = reply.size();
    for (auto stop : stops) end = std::min(end, ifind(reply, stop, begin));
    return collapse_whitespace(std::string_view(reply).substr(begin, end - begin));
}

// Splits "A. x B. y C. z" into its three parts.
std::optional<std::array<std::string, 3>> lettered(const std::string& text) {
    std::array<std::string, 3> out;
    std::size_t from = 0;
    std::array<std::size_t, 4> starts{};
    const char* markers[] = {"A.", "B.", "C."};
    for (int i = 0; i < 3; ++i) {
        std::size_t p = text.find(markers[i], from);
        while (p != std::string::npos && p > 0 && !std::isspace(static_cast<unsigned char>(text[p - 1]))) {
            p = text.find(markers[i], p + 1);
        }
        if (p == std::string::npos) return std::nullopt;
        starts[i] = p;
        from = p + 2;
    }
    starts[3] = text.size();
    for (int i = 0; i < 3; ++i) {
        out[i] = collapse_whitespace(std::string_view(text).substr(starts[i] + 2, starts[i + 1] - starts[i] - 2));
        if (out[i].empty()) return std::nullopt;
    }
    return out;
}

std::string strip_final_period(std::string s) {
    while (!s.empty() && s.back() == '.') s.pop_back();
    return std::string(trim(s));
}

VqaSample four_option_sample(const QaDraft& draft, std::uint64_t seed) {
    std::vector<std::string> answers{draft.correct, draft.distractors[0], draft.distractors[1],
                                     draft.distractors[2]};
    std::vector<std::size_t> perm{0, 1, 2, 3};
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    VqaSample s;
    s.question = draft.question;
    s.gt_answer = draft.correct;
    s.distractors = draft.distractors;
    for (std::size_t slot = 0; slot < 4; ++slot) {
        char letter = static_cast<char>('A' + slot);
        s.options[letter] = answers[perm[slot]];
        if (perm[slot] == 0) s.gt_letter = letter;
    }
    return s;
}

}  // namespace

Date Date::parse(std::string_view s) {
    s = trim(s);
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') throw ParseError("bad date '" + std::string(s) + "'");
    Date d{parse_digits(s.substr(0, 4)), parse_digits(s.substr(5, 2)), parse_digits(s.substr(8, 2))};
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month)) {
        throw ParseError("no such date '" + std::string(s) + "'");
    }
    return d;
}

std::string Date::str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

std::string_view to_string(QuerySource v) {
    return v == QuerySource::trends_feed ? "trends_feed" : "manual";
}

std::vector<TrendQuery> load_queries(std::istream& trends, std::istream& manual, Diagnostics* diag) {
    std::vector<TrendQuery> out;
    std::set<std::string> seen;
    read_query_lines(trends, QuerySource::trends_feed, out, seen, diag);
    read_query_lines(manual, QuerySource::manual, out, seen, diag);
    return out;
}

std::vector<TrendQuery> load_queries(const std::filesystem::path& trends, const std::filesystem::path& manual,
                                     Diagnostics* diag) {
    std::ifstream t(trends);
    if (!t) throw Error("cannot open " + trends.string());
    std::ifstream m(manual);
    if (!m) throw Error("cannot open " + manual.string());
    return load_queries(t, m, diag);
}

std::string qa_generation_prompt(const std::string& content) {
    return "Given context: " + content +
           " Filling the blanks to generate a question about the most informative event of the context, generate "
           "an correct answer to the question in no more than three words based on context, and generate three "
           "incorrectly confused answers of no more than three words based on context. Question: ___ Correct "
           "answer: ___ Incorrect answers: A. ___ B. ___ C. ___";
}

std::optional<QaDraft> parse_qa_reply(const std::string& reply, const ContentSegment& segment, Diagnostics* diag) {
    auto reject = [&](const std::string& why) -> std::optional<QaDraft> {
        flag(diag, "datagen", segment.site_url + "#" + std::to_string(segment.index) + ": draft rejected: " + why);
        return std::nullopt;
    };
    auto question = field(reply, "Question:", {"Correct answer:", "Incorrect answers:"});
    auto correct = field(reply, "Correct answer:", {"Incorrect answers:", "Question:"});
    auto incorrect = field(reply, "Incorrect answers:", {"Question:", "Correct answer:"});
    if (!question || question->empty()) return reject("no question");
    if (!correct || correct->empty()) return reject("no correct answer");
    if (!incorrect) return reject("no incorrect answers");
    auto wrong = lettered(*incorrect);
    if (!wrong) return reject("incorrect answers are not A./B./C.");

    QaDraft d;
    d.segment = segment;
    d.question = *question;
    d.correct = strip_final_period(*correct);
    for (std::size_t i = 0; i < 3; ++i) d.distractors[i] = strip_final_period((*wrong)[i]);

    std::set<std::string> distinct{to_lower(d.correct)};
    for (const auto& w : d.distractors) distinct.insert(to_lower(w));
    if (distinct.size() != 4) return reject("answers are not distinct");
    if (d.correct.empty() || std::any_of(d.distractors.begin(), d.distractors.end(),
                                         [](const std::string& w) { return w.empty(); })) {
        return reject("empty answer");
    }

    auto too_long = [](const std::string& a) { return count_tokens(a) > kMaxAnswerWords; };
    if (too_long(d.correct) ||
        std::any_of(d.distractors.begin(), d.distractors.end(), too_long)) {
        flag(diag, "datagen",
             segment.site_url + "#" + std::to_string(segment.index) + ": answer longer than three words");
    }
    return d;
}

std::optional<QaDraft> gen_qa_pair(const ContentSegment& segment, const GeneratorBackend& llm, Diagnostics* diag) {
    if (trim(segment.text).empty()) throw PreconditionError("segment is empty");
    std::string reply;
    try {
        reply = llm.generate(qa_generation_prompt(segment.text), std::nullopt);
    } catch (const std::exception& e) {
        flag(diag, "datagen", std::string("QA generation failed: ") + e.what());
        return std::nullopt;
    }
    return parse_qa_reply(reply, segment, diag);
}

bool verify_qa(const QaDraft& draft, const GeneratorBackend& llm, std::uint64_t seed, Diagnostics* diag) {
    VqaSample s = four_option_sample(draft, seed);
    s.id = draft.segment.site_url + "#" + std::to_string(draft.segment.index);
    AnswerRecord rec = answer_sample(s, draft.segment.text, llm, false, diag);
    return rec.correct.value_or(false);
}

std::optional<std::string> extract_entity(const std::string& question, const NerBackend& ner) {
    auto spans = ner.entities(question);
    std::stable_sort(spans.begin(), spans.end(),
                     [](const EntitySpan& a, const EntitySpan& b) { return a.offset < b.offset; });
    for (const auto& s : spans) {
        if (!trim(s.text).empty()) return std::string(trim(s.text));
    }
    return std::nullopt;
}

std::optional<HypernymRewrite> hypernym_replace(const std::string& question, const std::string& entity,
                                                const HypernymBackend& hypernyms, Diagnostics* diag) {
    auto pos = entity.empty() ? std::string::npos : question.find(entity);
    if (pos == std::string::npos) throw PreconditionError("entity '" + entity + "' not in question");
    std::string hyper;
    try {
        hyper = std::string(trim(hypernyms.hypernym(entity)));
    } catch (const std::exception& e) {
        flag(diag, "datagen", "hypernym lookup failed for '" + entity + "': " + e.what());
        return std::nullopt;
    }
    if (hyper.empty() || to_lower(hyper) == to_lower(entity)) {
        flag(diag, "datagen", "no usable hypernym for '" + entity + "'");
        return std::nullopt;
    }
    HypernymRewrite out;
    out.question = question.substr(0, pos) + hyper + question.substr(pos + entity.size());
    out.hypernym = std::move(hyper);
    return out;
}

std::vector<std::string> assign_images(const std::string& entity, const ImageSearchBackend& images,
                                       const EmbedderBackend& embedder, std::size_t k_img, std::uint64_t seed,
                                       std::size_t limit) {
    std::vector<std::string> refs = images.search_images(entity, limit);
    if (refs.empty()) return {};
    std::vector<Vector> feats;
    for (const auto& r : refs) feats.push_back(embedder.embed(EmbedInput::image(r)));
    std::size_t k = std::clamp<std::size_t>(k_img, 1, refs.size());
    ClusterResult cr = kmeans(feats, k, seed);
    auto sizes = cr.cluster_sizes();
    std::size_t best = static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    std::vector<std::string> out;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (cr.assignments[i] == best) out.push_back(refs[i]);
    }
    return out;
}

VqaSample assemble_sample(const QaDraft& draft, const std::string& image_ref, const std::string& id,
                          std::uint64_t seed) {
    VqaSample s = four_option_sample(draft, seed);
    s.id = id;
    s.image_ref = image_ref;
    s.options[kComplementLetter] = std::string(kComplementOption);
    s.gt_segment = draft.segment;
    return s;
}

TemporalSplit temporal_split(const std::vector<VqaSample>& samples, const std::map<std::string, Date>& query_dates,
                             const Date& cutoff, Diagnostics* diag) {
    TemporalSplit out;
    for (const auto& s : samples) {
        auto it = s.source_query ? query_dates.find(*s.source_query) : query_dates.end();
        if (it == query_dates.end()) {
            flag(diag, "datagen", s.id + ": no dated source query, excluded from split");
            continue;
        }
        (it->second < cutoff ? out.train : out.test).push_back(s);
    }
    return out;
}

void write_review(const std::filesystem::path& path, const std::vector<VqaSample>& samples) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& s : samples) out << json{{"sample", s}, {"keep", nullptr}}.dump() << '\n';
}

std::vector<VqaSample> read_review(const std::filesystem::path& path, Diagnostics* diag) {
    std::vector<VqaSample> kept;
    for (const auto& entry : read_jsonl<json>(path)) {
        auto s = entry.at("sample").get<VqaSample>();
        const json& keep = entry.contains("keep") ? entry["keep"] : json(nullptr);
        if (keep.is_boolean() && keep.get<bool>()) {
            kept.push_back(std::move(s));
        } else if (keep.is_null()) {
            flag(diag, "datagen", s.id + ": not reviewed, left out");
        }
    }
    return kept;
}

DatagenResult generate_samples(const std::vector<TrendQuery>& queries, const DatagenBackends& backends,
                               const DatagenOptions& options, Diagnostics* diag) {
    struct PerQuery {
        std::vector<VqaSample> samples;
        std::map<std::string, std::vector<ContentSegment>> news;
        std::map<std::string, SearchHit> hits;
        DatagenStats stats;
        Diagnostics diag;
    };

    auto run_query = [&](std::size_t qi) {
        PerQuery r;
        const TrendQuery& tq = queries[qi];
        r.stats.queries = 1;
        Query query(tq.text, tq.source == QuerySource::manual ? QueryOrigin::manual : QueryOrigin::trend);

        std::vector<WebsiteDoc> news;
        try {
            for (const auto& hit : backends.search->search(query, options.news_per_query)) {
                WebsiteDoc doc = fetch_and_parse(hit, *backends.fetcher);
                if (doc.available()) news.push_back(std::move(doc));
            }
        } catch (const std::exception& e) {
            r.diag.flag("datagen", "search failed for '" + tq.text + "': " + e.what());
        }
        if (news.empty()) {
            r.stats.queries_without_news = 1;
            return r;
        }

        std::map<std::string, std::vector<std::string>> image_cache;
        const std::string prefix = "q" + hex64(fnv1a64(tq.text)).substr(0, 8);
        for (std::size_t di = 0; di < news.size(); ++di) {
            const WebsiteDoc& doc = news[di];
            std::size_t n = doc.segments.size();
            if (options.max_segments_per_news) n = std::min(n, options.max_segments_per_news);
            for (std::size_t si = 0; si < n; ++si) {
                const ContentSegment& seg = doc.segments[si];
                const std::string id = prefix + "-" + std::to_string(di) + "-" + std::to_string(seg.index);
                ++r.stats.segments;

                auto draft = gen_qa_pair(seg, *backends.llm, &r.diag);
                if (!draft) {
                    ++r.stats.rejected_parse;
                    continue;
                }
                if (!verify_qa(*draft, *backends.llm, derive_seed(options.seed, id + "/verify"), &r.diag)) {
                    ++r.stats.rejected_verify;
                    continue;
                }
                std::optional<std::string> entity;
                try {
                    entity = extract_entity(draft->question, *backends.ner);
                } catch (const std::exception& e) {
                    r.diag.flag("datagen", id + ": NER failed: " + e.what());
                }
                if (!entity) {
                    ++r.stats.no_entity;
                    continue;
                }
                auto rewrite = hypernym_replace(draft->question, *entity, *backends.hypernyms, &r.diag);
                if (!rewrite) {
                    ++r.stats.no_hypernym;
                    continue;
                }
                draft->entity = entity;
                draft->hypernym = rewrite->hypernym;
                draft->question = rewrite->question;

                auto cached = image_cache.find(*entity);
                if (cached == image_cache.end()) {
                    std::vector<std::string> imgs;
                    try {
                        imgs = assign_images(*entity, *backends.images, *backends.embedder, options.image_clusters,
                                             derive_seed(options.seed, *entity));
                    } catch (const std::exception& e) {
                        r.diag.flag("datagen", id + ": image assignment failed: " + e.what());
                    }
                    cached = image_cache.emplace(*entity, std::move(imgs)).first;
                }
                if (cached->second.empty()) {
                    ++r.stats.no_images;
                    continue;
                }

                VqaSample s = assemble_sample(*draft, cached->second.front(), id, derive_seed(options.seed, id));
                s.source_query = tq.text;
                r.news[id] = doc.segments;
                r.hits[id] = doc.hit;
                r.samples.push_back(std::move(s));
                ++r.stats.samples;
            }
        }
        return r;
    };

    auto per_query = parallel_map(queries.size(), options.workers, run_query);

    DatagenResult out;
    for (auto& r : per_query) {
        for (const auto& f : r.diag.flags()) flag(diag, f.stage, f.message);
        for (auto& s : r.samples) out.samples.push_back(std::move(s));
        out.news_segments.merge(r.news);
        out.news_hits.merge(r.hits);
        out.stats.queries += r.stats.queries;
        out.stats.queries_without_news += r.stats.queries_without_news;
        out.stats.segments += r.stats.segments;
        out.stats.rejected_parse += r.stats.rejected_parse;
        out.stats.rejected_verify += r.stats.rejected_verify;
        out.stats.no_entity += r.stats.no_entity;
        out.stats.no_hypernym += r.stats.no_hypernym;
        out.stats.no_images += r.stats.no_images;
        out.stats.samples += r.stats.samples;
    }
    return out;
}

void to_json(json& j, const TrendQuery& v) {
    j = json{{"text", v.text}, {"date", v.date.str()}, {"source", to_string(v.source)}};
}

void to_json(json& j, const DatagenStats& v) {
    j = json{{"queries", v.queries},
             {"queries_without_news", v.queries_without_news},
             {"segments", v.segments},
             {"rejected_parse", v.rejected_parse},
             {"rejected_verify", v.rejected_verify},
             {"no_entity", v.no_entity},
             {"no_hypernym", v.no_hypernym},
             {"no_images", v.no_images},
             {"samples", v.samples}};
}

}  // namespace iag
