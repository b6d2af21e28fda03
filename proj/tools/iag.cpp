#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "iag/augment.hpp"
#include "iag/backends/http.hpp"
#include "iag/backends/mock.hpp"
#include "iag/core/config.hpp"
#include "iag/core/errors.hpp"
#include "iag/core/jsonl.hpp"
#include "iag/core/url.hpp"
#include "iag/datagen.hpp"
#include "iag/eval.hpp"
#include "iag/fetch_cache.hpp"
#include "iag/labeler.hpp"
#include "iag/synth.hpp"

using namespace iag;

namespace {

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    bool offline = false;

    std::size_t world_samples = 20;
    std::size_t world_sites = 50;
    std::size_t world_duplicates = 0;
    double world_noise = 0.0;
    double world_unavailable = 0.0;
};

struct PipelineFlags {
    std::optional<std::size_t> top_n;
    std::optional<double> theta;
    std::optional<std::size_t> segment_cut;
    std::optional<std::size_t> clusters;
    std::optional<std::string> snippet_policy;
    std::optional<std::size_t> per_query_limit;
    bool no_option_e = false;
};

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& f) {
    cmd->add_option("--top-n", f.top_n, "Keep the N best websites");
    cmd->add_option("--theta", f.theta, "Token budget fraction for website selection");
    cmd->add_option("--segment-cut", f.segment_cut, "Segments kept after content filtering (M)");
    cmd->add_option("--clusters,--kmeans-k", f.clusters, "Diverse segments stitched into the context (K)");
    cmd->add_option("--snippet-policy", f.snippet_policy, "raw, discard or mixture");
    cmd->add_option("--per-query-limit", f.per_query_limit, "Search results per query");
    cmd->add_flag("--no-option-e", f.no_option_e, "Leave out the 'No Correct Answers' option");
}

json file_config(const Globals& g) {
    if (g.config_path.empty()) return json::object();
    return load_config_file(g.config_path);
}

PipelineConfig make_config(const Globals& g, const PipelineFlags& f) {
    PipelineConfig c = apply_config(PipelineConfig{}, file_config(g));
    if (g.seed) c.rng_seed = *g.seed;
    if (g.workers) c.workers = *g.workers;
    if (f.top_n) c.website_budget = TopN{*f.top_n};
    if (f.theta) c.website_budget = TokenFraction{*f.theta};
    if (f.segment_cut) c.segment_cut = *f.segment_cut;
    if (f.clusters) c.cluster_count = *f.clusters;
    if (f.snippet_policy) c.snippet_policy = parse_snippet_policy(*f.snippet_policy);
    if (f.per_query_limit) {
        c.per_query_limit = *f.per_query_limit;
    } else if (g.offline) {
        c.per_query_limit = std::max(c.per_query_limit, g.world_sites);
    }
    if (f.no_option_e) c.include_option_e = false;
    c.validate();
    return c;
}

std::string env_or_empty(const char* name) {
    const char* v = std::getenv(name);
    return v ? v : "";
}

std::string need(const json& cfg, const std::string& key) {
    if (!cfg.contains(key) || !cfg[key].is_string() || cfg[key].get<std::string>().empty()) {
        throw Error("config key '" + key + "' is required without --offline");
    }
    return cfg[key].get<std::string>();
}

HttpEndpoint endpoint(const json& cfg, const std::string& key, const char* env_key) {
    HttpEndpoint e;
    e.url = need(cfg, key);
    e.api_key = env_or_empty(env_key);
    if (cfg.contains("min_interval_ms")) e.min_interval = std::chrono::milliseconds(cfg["min_interval_ms"].get<int>());
    if (cfg.contains("max_attempts")) e.max_attempts = cfg["max_attempts"].get<int>();
    return e;
}

std::string model_name(const json& cfg, const std::string& key) {
    if (cfg.contains(key) && cfg[key].is_string()) return cfg[key].get<std::string>();
    return cfg.value("model", std::string("default"));
}

std::shared_ptr<const Fetcher> online_fetcher(const json& cfg) {
    FetchOptions opts;
    if (cfg.contains("fetch_timeout_ms")) opts.timeout = std::chrono::milliseconds(cfg["fetch_timeout_ms"].get<int>());
    if (cfg.contains("user_agent")) opts.user_agent = cfg["user_agent"].get<std::string>();
    std::shared_ptr<const Fetcher> f = std::make_shared<HttpFetcher>(opts);
    if (cfg.contains("cache_dir")) {
        auto cache = std::make_shared<FetchCache>(cfg["cache_dir"].get<std::string>());
        f = std::make_shared<CachingFetcher>(cache, f);
    }
    return f;
}

std::shared_ptr<const GeneratorBackend> chat(const json& cfg, const std::string& model_key) {
    return std::make_shared<ChatGenerator>(endpoint(cfg, "model_url", "MODEL_API_KEY"), model_name(cfg, model_key));
}

synth::WorldOptions world_options(const Globals& g) {
    synth::WorldOptions o;
    o.samples = g.world_samples;
    o.sites = g.world_sites;
    o.duplicate_copies = g.world_duplicates;
    o.unavailable_fraction = g.world_unavailable;
    o.seed = g.seed.value_or(0);
    return o;
}

struct Session {
    std::optional<synth::SyntheticWorld> world;
    Backends backends;
};

Session make_session(const Globals& g) {
    Session s;
    if (g.offline) {
        s.world.emplace(world_options(g));
        const auto& w = *s.world;
        s.backends.query_llm = w.reader();
        s.backends.visual = w.visual();
        s.backends.search = w.search();
        s.backends.fetcher = w.fetcher();
        s.backends.website_scorer = w.scorer(g.world_noise, 1);
        s.backends.content_scorer = w.scorer(g.world_noise, 2);
        s.backends.embedder = w.embedder();
        s.backends.answerer = g.world_duplicates ? w.duplicate_penalizing_reader() : w.reader();
        return s;
    }
    json cfg = file_config(g);
    s.backends.query_llm = chat(cfg, "query_model");
    if (cfg.contains("visual_url")) {
        s.backends.visual = std::make_shared<HttpVisualSearch>(endpoint(cfg, "visual_url", "SEARCH_API_KEY"));
    }
    s.backends.search = std::make_shared<HttpWebSearch>(endpoint(cfg, "search_url", "SEARCH_API_KEY"));
    s.backends.fetcher = online_fetcher(cfg);
    s.backends.website_scorer = std::make_shared<GeneratorScorer>(chat(cfg, "website_scorer_model"));
    s.backends.content_scorer = std::make_shared<GeneratorScorer>(chat(cfg, "content_scorer_model"));
    s.backends.embedder = std::make_shared<HttpEmbedder>(endpoint(cfg, "embed_url", "EMBED_API_KEY"),
                                                         model_name(cfg, "embed_model"),
                                                         cfg.value("embed_dim", std::size_t{512}));
    s.backends.answerer = chat(cfg, "answer_model");
    return s;
}

struct SampleArgs {
    std::string question;
    std::string image;
    std::vector<std::string> options;
    std::string gt;
    std::string sample_id;
};

void add_sample_args(CLI::App* cmd, SampleArgs& a, bool with_options) {
    cmd->add_option("-q,--question", a.question, "Question about the image");
    cmd->add_option("-i,--image", a.image, "Image reference (path or URL)");
    cmd->add_option("--sample", a.sample_id, "Use a sample of the offline world by id");
    if (with_options) {
        cmd->add_option("-o,--option", a.options, "Answer options A-D, in order")->expected(0, 4);
        cmd->add_option("--gt", a.gt, "Ground-truth letter, if known");
    }
}

VqaSample resolve_sample(const SampleArgs& a, const Session& s) {
    if (!a.sample_id.empty()) {
        if (!s.world) throw Error("--sample needs --offline");
        for (const auto& smp : s.world->samples()) {
            if (smp.id == a.sample_id) return smp;
        }
        throw Error("no offline sample '" + a.sample_id + "'");
    }
    if (a.question.empty()) throw Error("--question or --sample is required");
    VqaSample smp;
    smp.id = "cli";
    smp.question = a.question;
    smp.image_ref = a.image;
    for (std::size_t i = 0; i < a.options.size(); ++i) smp.options[static_cast<char>('A' + i)] = a.options[i];
    smp.options[kComplementLetter] = std::string(kComplementOption);
    if (!a.gt.empty()) smp.gt_letter = a.gt.front();
    return smp;
}

std::vector<VqaSample> load_samples(const std::string& path, const Session& s) {
    if (!path.empty()) return read_jsonl<VqaSample>(path);
    if (!s.world) throw Error("--samples is required without --offline");
    return s.world->samples();
}

void print(const json& j) {
    std::cout << j.dump(2) << '\n';
}

void print_flags(const Diagnostics& diag) {
    for (const auto& f : diag.flags()) std::cerr << "[" << f.stage << "] " << f.message << '\n';
}

template <typename T>
std::vector<T> parse_list(const std::string& text) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty()) continue;
        std::istringstream is{std::string(trim(item))};
        T v;
        if (!(is >> v) || !is.eof()) throw Error("bad list item '" + item + "'");
        out.push_back(v);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Internet-augmented answering pipeline for image-grounded questions"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config_path, "JSON or key = value config file");
    app.add_option("--seed", g.seed, "Seed for clustering, shuffles and the offline world");
    app.add_option("--workers", g.workers, "Worker threads");
    app.add_flag("--offline", g.offline, "Use the built-in synthetic world instead of network backends");
    app.add_option("--world-samples", g.world_samples, "Offline world: number of samples");
    app.add_option("--world-sites", g.world_sites, "Offline world: sites per topic");
    app.add_option("--world-duplicates", g.world_duplicates, "Offline world: copies of the answer segment");
    app.add_option("--world-noise", g.world_noise, "Offline world: scorer noise probability");
    app.add_option("--world-unavailable", g.world_unavailable, "Offline world: fraction of unreachable sites");

    PipelineFlags pf;
    SampleArgs sa;

    auto* query = app.add_subcommand("query", "Generate search queries for a question and image");
    add_sample_args(query, sa, false);

    std::vector<std::string> search_terms;
    auto* search = app.add_subcommand("search", "Run web searches and print deduplicated hits as JSONL");
    search->add_option("terms", search_terms, "Search queries")->required();
    add_pipeline_flags(search, pf);

    std::string fetch_url;
    std::string cache_dir;
    auto* fetch = app.add_subcommand("fetch", "Fetch and segment one page");
    fetch->add_option("url", fetch_url, "Page URL")->required();
    fetch->add_option("--cache-dir", cache_dir, "Fetch cache directory");

    auto* filter_cmd = app.add_subcommand("filter", "Score websites and segments for a question");
    add_sample_args(filter_cmd, sa, false);
    add_pipeline_flags(filter_cmd, pf);

    std::string context, context_file;
    auto* answer = app.add_subcommand("answer", "Answer a multiple-choice question from a given context");
    add_sample_args(answer, sa, true);
    answer->add_option("-c,--context", context, "Context text");
    answer->add_option("--context-file", context_file, "Read the context from a file");
    add_pipeline_flags(answer, pf);

    std::string strategy_name = "ours_div";
    auto* run = app.add_subcommand("run", "End-to-end pipeline; prints the stage trace");
    add_sample_args(run, sa, true);
    run->add_option("--strategy", strategy_name, "Context strategy");
    add_pipeline_flags(run, pf);

    std::string samples_path, news_path, out_dir = "labels";
    auto* label = app.add_subcommand("label", "Pseudo-score segments and write filter training records");
    label->add_option("--samples", samples_path, "Samples JSONL (with ground-truth segments)");
    label->add_option("--news", news_path, "News JSONL written by datagen");
    label->add_option("--out", out_dir, "Output directory");

    std::string trends_path, manual_path, cutoff = "2024-04-01";
    std::string datagen_out = "datagen";
    auto* datagen = app.add_subcommand("datagen", "Generate multiple-choice samples from dated news queries");
    datagen->add_option("--trends", trends_path, "Trend queries file");
    datagen->add_option("--manual", manual_path, "Manually collected queries file");
    datagen->add_option("--cutoff", cutoff, "First test date (YYYY-MM-DD)");
    datagen->add_option("--out", datagen_out, "Output directory");

    std::vector<std::string> strategies;
    std::string format = "both";
    std::string records_path;
    auto* eval = app.add_subcommand("eval", "Accuracy per category for one or more strategies");
    eval->add_option("--samples", samples_path, "Samples JSONL");
    eval->add_option("--strategy", strategies, "Strategies (default ours_div; 'all' for every one)");
    eval->add_option("--format", format, "table, json or both")->check(CLI::IsMember({"table", "json", "both"}));
    eval->add_option("--records", records_path, "Write answer records JSONL here");
    add_pipeline_flags(eval, pf);

    std::string thetas_text = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0";
    auto* sweep = app.add_subcommand("sweep-theta", "Accuracy and processed tokens across token budgets");
    sweep->add_option("--samples", samples_path, "Samples JSONL");
    sweep->add_option("--thetas", thetas_text, "Comma-separated budgets in (0, 1]");
    sweep->add_option("--format", format, "table, json or both")->check(CLI::IsMember({"table", "json", "both"}));
    add_pipeline_flags(sweep, pf);

    std::string ks_text = "1,2,4,6,8";
    auto* compare = app.add_subcommand("compare-k", "Top-K against Div-K for several K");
    compare->add_option("--samples", samples_path, "Samples JSONL");
    compare->add_option("--ks", ks_text, "Comma-separated K values");
    compare->add_option("--format", format, "table, json or both")->check(CLI::IsMember({"table", "json", "both"}));
    add_pipeline_flags(compare, pf);

    CLI11_PARSE(app, argc, argv);

    try {
        auto emit = [&](const std::string& table, const json& j) {
            if (format != "json") std::cout << table;
            if (format != "table") print(j);
        };

        if (query->parsed()) {
            Session s = make_session(g);
            VqaSample smp = resolve_sample(sa, s);
            PipelineConfig c = make_config(g, pf);
            Diagnostics diag;
            Gathered gathered;
            QuestionQueries qq = gen_question_queries(smp.question, *s.backends.query_llm);
            std::vector<Query> iq;
            if (s.backends.visual && !smp.image_ref.empty()) {
                iq = gen_image_queries(smp.image_ref, *s.backends.visual, c.image_query_support, &diag);
            }
            QueryBundle b = make_bundle(qq.queries, iq);
            json out{{"question_queries", json::array()}, {"image_queries", json::array()}, {"fell_back", qq.fell_back}};
            for (const auto& q : b.question_queries) out["question_queries"].push_back(q.text());
            for (const auto& q : b.image_queries) out["image_queries"].push_back(q.text());
            print(out);
            print_flags(diag);
        } else if (search->parsed()) {
            Session s = make_session(g);
            PipelineConfig c = make_config(g, pf);
            QueryBundle b;
            for (const auto& t : search_terms) b.question_queries.emplace_back(t, QueryOrigin::manual);
            b = make_bundle(b.question_queries, {});
            Diagnostics diag;
            write_jsonl(std::cout, search_all(b, *s.backends.search, c.per_query_limit, c.workers, &diag));
            print_flags(diag);
        } else if (fetch->parsed()) {
            Session s = make_session(g);
            std::shared_ptr<const Fetcher> fetcher = s.backends.fetcher;
            if (!cache_dir.empty()) {
                fetcher = std::make_shared<CachingFetcher>(std::make_shared<FetchCache>(cache_dir),
                                                           fetcher);
            }
            SearchHit hit;
            hit.url = normalize_url(fetch_url);
            std::string failure;
            WebsiteDoc doc = fetch_and_parse(hit, *fetcher, Tokenizer::whitespace, &failure);
            print(json(doc));
            if (!failure.empty()) std::cerr << "unavailable: " << failure << '\n';
        } else if (filter_cmd->parsed()) {
            Session s = make_session(g);
            VqaSample smp = resolve_sample(sa, s);
            PipelineConfig c = make_config(g, pf);
            Diagnostics diag;
            Gathered gathered = gather(smp, c, s.backends, c.workers, &diag);
            if (gathered.empty) throw RetrievalEmpty("nothing retrieved");
            Filtered f = filter(smp, gathered, c, s.backends, c.workers, &diag);
            json out{{"websites", json::array()}, {"kept_sites", json::array()}, {"top_segments", json::array()},
                     {"processed_tokens", f.selection.processed_tokens}, {"total_tokens", f.selection.total_tokens}};
            for (const auto& w : f.websites) {
                out["websites"].push_back({{"url", w.hit.url}, {"title", w.hit.title}, {"score", w.score}});
            }
            for (const auto& d : f.selection.docs) out["kept_sites"].push_back(d.hit.url);
            for (const auto& t : f.top) {
                out["top_segments"].push_back({{"site_url", t.segment.site_url},
                                               {"index", t.segment.index},
                                               {"score", t.score},
                                               {"text", t.segment.text}});
            }
            print(out);
            print_flags(diag);
        } else if (answer->parsed()) {
            Session s = make_session(g);
            VqaSample smp = resolve_sample(sa, s);
            PipelineConfig c = make_config(g, pf);
            if (!context_file.empty()) {
                std::ifstream in(context_file);
                if (!in) throw Error("cannot open " + context_file);
                std::stringstream ss;
                ss << in.rdbuf();
                context = ss.str();
            }
            Diagnostics diag;
            print(json(answer_sample(smp, context, *s.backends.answerer, c.include_option_e, &diag)));
            print_flags(diag);
        } else if (run->parsed()) {
            Session s = make_session(g);
            VqaSample smp = resolve_sample(sa, s);
            PipelineConfig c = make_config(g, pf);
            print(run_pipeline(smp, c, s.backends, parse_strategy(strategy_name)).trace);
        } else if (datagen->parsed()) {
            Diagnostics diag;
            std::vector<TrendQuery> queries;
            DatagenBackends backends;
            if (g.offline) {
                auto world = synth::make_datagen_world(g.seed.value_or(0));
                std::istringstream t(world.trends_text), m(world.manual_text);
                queries = load_queries(t, m, &diag);
                backends = world.backends;
            } else {
                if (trends_path.empty() || manual_path.empty()) throw Error("--trends and --manual are required");
                queries = load_queries(trends_path, manual_path, &diag);
                json cfg = file_config(g);
                auto llm = chat(cfg, "datagen_model");
                backends.search = std::make_shared<HttpWebSearch>(endpoint(cfg, "search_url", "SEARCH_API_KEY"));
                backends.fetcher = online_fetcher(cfg);
                backends.llm = llm;
                backends.ner = std::make_shared<LlmNer>(llm);
                backends.hypernyms = std::make_shared<LlmHypernyms>(llm);
                backends.images =
                    std::make_shared<HttpImageSearch>(endpoint(cfg, "image_search_url", "SEARCH_API_KEY"));
                backends.embedder = std::make_shared<HttpEmbedder>(endpoint(cfg, "embed_url", "EMBED_API_KEY"),
                                                                   model_name(cfg, "embed_model"),
                                                                   cfg.value("embed_dim", std::size_t{512}));
            }
            DatagenOptions opts;
            opts.seed = g.seed.value_or(0);
            opts.workers = g.workers.value_or(1);
            DatagenResult result = generate_samples(queries, backends, opts, &diag);

            std::map<std::string, Date> dates;
            for (const auto& q : queries) dates[q.text] = q.date;
            TemporalSplit split = temporal_split(result.samples, dates, Date::parse(cutoff), &diag);

            std::filesystem::create_directories(datagen_out);
            std::filesystem::path out(datagen_out);
            write_jsonl(out / "samples.jsonl", result.samples);
            write_jsonl(out / "train.jsonl", split.train);
            write_jsonl(out / "test.jsonl", split.test);
            write_review(out / "review.jsonl", split.test);
            std::vector<json> news;
            for (const auto& [id, segs] : result.news_segments) {
                news.push_back({{"sample_id", id}, {"hit", result.news_hits.at(id)}, {"segments", segs}});
            }
            write_jsonl(out / "news.jsonl", news);
            print(json{{"stats", result.stats}, {"train", split.train.size()}, {"test", split.test.size()}});
            print_flags(diag);
        } else if (label->parsed()) {
            Diagnostics diag;
            std::vector<VqaSample> samples;
            std::map<std::string, std::vector<ContentSegment>> news;
            std::vector<SearchHit> sites;
            Voters voters;
            if (g.offline && samples_path.empty()) {
                auto world = synth::make_datagen_world(g.seed.value_or(0));
                std::istringstream t(world.trends_text), m(world.manual_text);
                DatagenOptions opts;
                opts.seed = g.seed.value_or(0);
                auto result = generate_samples(load_queries(t, m, &diag), world.backends, opts, &diag);
                samples = result.samples;
                news = result.news_segments;
                for (const auto& [id, hit] : result.news_hits) sites.push_back(hit);
            } else {
                if (samples_path.empty() || news_path.empty()) throw Error("--samples and --news are required");
                samples = read_jsonl<VqaSample>(samples_path);
                for (const auto& j : read_jsonl<json>(news_path)) {
                    news[j.at("sample_id").get<std::string>()] = j.at("segments").get<std::vector<ContentSegment>>();
                    sites.push_back(j.at("hit").get<SearchHit>());
                }
            }
            if (g.offline) {
                auto base = std::make_shared<synth::ContextReader>();
                for (int v = 0; v < 5; ++v) {
                    voters.push_back(std::make_shared<synth::FallibleReader>(base, 0.1 * v, 100 + v));
                }
            } else {
                json cfg = file_config(g);
                auto models = cfg.value("voter_models", std::string());
                std::stringstream ss(models);
                std::string m;
                while (std::getline(ss, m, ',')) {
                    voters.push_back(std::make_shared<ChatGenerator>(endpoint(cfg, "model_url", "MODEL_API_KEY"),
                                                                     std::string(trim(m))));
                }
                if (voters.empty()) throw Error("config key 'voter_models' lists no models");
            }
            std::vector<VoteOutcome> outcomes;
            for (const auto& smp : samples) {
                auto it = news.find(smp.id);
                if (it == news.end() || !smp.gt_segment) {
                    diag.flag("labeler", smp.id + ": no news segments, skipped");
                    continue;
                }
                auto o = label_sample(smp, it->second, voters, g.seed.value_or(0), g.workers.value_or(1), &diag);
                outcomes.insert(outcomes.end(), o.begin(), o.end());
            }
            TrainingRecords records = emit_training_records(samples, outcomes, sites, &diag);
            write_training_records(records, out_dir);
            print(json{{"website_records", records.website.size()}, {"content_records", records.content.size()}});
            print_flags(diag);
        } else if (eval->parsed()) {
            Session s = make_session(g);
            PipelineConfig c = make_config(g, pf);
            auto samples = load_samples(samples_path, s);
            std::vector<Strategy> chosen;
            if (strategies.empty()) strategies.push_back("ours_div");
            for (const auto& name : strategies) {
                if (name == "all") {
                    chosen.assign(kAllStrategies.begin(), kAllStrategies.end());
                } else {
                    chosen.push_back(parse_strategy(name));
                }
            }
            std::vector<EvalReport> reports;
            json all = json::array();
            for (auto st : chosen) {
                reports.push_back(evaluate(samples, st, c, s.backends));
                all.push_back(report_json(reports.back()));
            }
            if (!records_path.empty()) write_jsonl(records_path, reports.back().records);
            emit(report_table(reports), all);
        } else if (sweep->parsed()) {
            Session s = make_session(g);
            PipelineConfig c = make_config(g, pf);
            auto result = theta_sweep(load_samples(samples_path, s), parse_list<double>(thetas_text), c, s.backends);
            emit(sweep_table(result), to_json(result));
        } else if (compare->parsed()) {
            Session s = make_session(g);
            PipelineConfig c = make_config(g, pf);
            auto rows = compare_topk_div(load_samples(samples_path, s), parse_list<std::size_t>(ks_text), c,
                                         s.backends);
            emit(compare_table(rows), to_json(rows));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
