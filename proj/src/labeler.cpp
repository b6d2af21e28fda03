#include "iag/labeler.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <tuple>

#include "iag/augment.hpp"
#include "iag/core/errors.hpp"
#include "iag/core/jsonl.hpp"
#include "iag/core/parallel.hpp"
#include "iag/core/rng.hpp"
#include "iag/hierfilter.hpp"

namespace iag {

std::vector<ContentSegment> sample_distractor_segments(const std::vector<ContentSegment>& news,
                                                       const ContentSegment& gt, std::size_t k, std::uint64_t seed) {
    std::vector<ContentSegment> pool;
    for (const auto& s : news) {
        if (s.site_url == gt.site_url && s.index == gt.index) continue;
        pool.push_back(s);
    }
    std::mt19937_64 rng(seed);
    std::shuffle(pool.begin(), pool.end(), rng);
    if (pool.size() > k) pool.resize(k);
    std::sort(pool.begin(), pool.end(), [](const ContentSegment& a, const ContentSegment& b) {
        return std::tie(a.site_url, a.index) < std::tie(b.site_url, b.index);
    });
    return pool;
}

QuantizedScore vote_rate(std::size_t correct, std::size_t voters) {
    if (voters == 0) throw ParameterError("at least one voter is required");
    if (correct > voters) throw ParameterError("more correct votes than voters");
    return QuantizedScore::nearest(correct, voters);
}

VoteOutcome pseudo_score_segment(const VqaSample& sample, const ContentSegment& segment, const Voters& voters,
                                 std::size_t workers, Diagnostics* diag) {
    if (voters.empty()) throw ParameterError("at least one voter is required");
    if (!sample.gt_letter) throw PreconditionError(sample.id + ": sample has no ground-truth letter");
    const bool include_e = sample.options.count(kComplementLetter) > 0;

    auto records = parallel_map(voters.size(), workers, [&](std::size_t v) {
        return answer_sample(sample, segment.text, *voters[v], include_e, nullptr);
    });

    VoteOutcome out;
    out.sample_id = sample.id;
    out.segment = segment;
    std::size_t correct = 0;
    for (std::size_t v = 0; v < records.size(); ++v) {
        if (!records[v].error.empty()) {
            flag(diag, "labeler", sample.id + ": voter " + std::to_string(v) + " failed: " + records[v].error);
        }
        bool ok = records[v].correct.value_or(false);
        out.votes.push_back(ok);
        if (ok) ++correct;
    }
    out.pseudo = vote_rate(correct, voters.size());
    return out;
}

QuantizedScore pseudo_score_website(const std::vector<VoteOutcome>& outcomes) {
    if (outcomes.empty()) throw ParameterError("website has no segment outcomes");
    QuantizedScore best = outcomes.front().pseudo;
    for (const auto& o : outcomes) best = std::max(best, o.pseudo);
    return best;
}

std::vector<VoteOutcome> label_sample(const VqaSample& sample, const std::vector<ContentSegment>& news,
                                      const Voters& voters, std::uint64_t seed, std::size_t workers,
                                      Diagnostics* diag) {
    if (!sample.gt_segment) throw PreconditionError(sample.id + ": sample has no ground-truth segment");
    std::vector<VoteOutcome> out;
    VoteOutcome gt;
    gt.sample_id = sample.id;
    gt.segment = *sample.gt_segment;
    gt.pseudo = QuantizedScore::from_fifths(5);
    gt.ground_truth = true;
    out.push_back(std::move(gt));

    auto distractors =
        sample_distractor_segments(news, *sample.gt_segment, kDistractorSegments, derive_seed(seed, sample.id));
    for (const auto& seg : distractors) out.push_back(pseudo_score_segment(sample, seg, voters, workers, diag));
    return out;
}

TrainingRecords emit_training_records(const std::vector<VqaSample>& samples,
                                      const std::vector<VoteOutcome>& outcomes,
                                      const std::vector<SearchHit>& sites, Diagnostics* diag) {
    std::map<std::string, std::size_t> site_order;
    for (std::size_t i = 0; i < sites.size(); ++i) site_order.emplace(sites[i].url, i);
    auto order_of = [&](const std::string& url) {
        auto it = site_order.find(url);
        return it == site_order.end() ? sites.size() : it->second;
    };

    std::vector<const VqaSample*> ordered;
    for (const auto& s : samples) ordered.push_back(&s);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const VqaSample* a, const VqaSample* b) { return a->id < b->id; });

    TrainingRecords out;
    for (const VqaSample* sample : ordered) {
        std::vector<const VoteOutcome*> mine;
        for (const auto& o : outcomes) {
            if (o.sample_id == sample->id) mine.push_back(&o);
        }
        std::stable_sort(mine.begin(), mine.end(), [&](const VoteOutcome* a, const VoteOutcome* b) {
            auto ka = std::make_tuple(order_of(a->segment.site_url), a->segment.site_url, a->segment.index);
            auto kb = std::make_tuple(order_of(b->segment.site_url), b->segment.site_url, b->segment.index);
            return ka < kb;
        });

        std::map<std::string, std::vector<VoteOutcome>> by_site;
        std::vector<std::string> site_seq;
        for (const VoteOutcome* o : mine) {
            InstructionRecord rec;
            rec.kind = RecordKind::content;
            rec.instruction = render_content_instruction(o->segment.text, sample->question);
            rec.target = score_to_letter(o->pseudo);
            rec.sample_id = sample->id;
            rec.site_url = o->segment.site_url;
            rec.segment_index = o->segment.index;
            rec.image_ref = sample->image_ref;
            out.content.push_back(std::move(rec));

            if (!by_site.count(o->segment.site_url)) site_seq.push_back(o->segment.site_url);
            by_site[o->segment.site_url].push_back(*o);
        }

        for (const auto& url : site_seq) {
            auto idx = order_of(url);
            if (idx == sites.size() || sites[idx].title.empty() || sites[idx].snippet.empty()) {
                flag(diag, "labeler", sample->id + ": no title/snippet for " + url + ", website record skipped");
                continue;
            }
            InstructionRecord rec;
            rec.kind = RecordKind::website;
            rec.instruction = render_website_instruction(sites[idx].title, sites[idx].snippet, sample->question);
            rec.target = score_to_letter(pseudo_score_website(by_site[url]));
            rec.sample_id = sample->id;
            rec.site_url = url;
            rec.image_ref = sample->image_ref;
            out.website.push_back(std::move(rec));
        }
    }
    return out;
}

void write_training_records(const TrainingRecords& records, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_jsonl(dir / "website.jsonl", records.website);
    write_jsonl(dir / "content.jsonl", records.content);
}

void to_json(json& j, const InstructionRecord& v) {
    json meta{{"kind", v.kind == RecordKind::website ? "website" : "content"},
              {"sample_id", v.sample_id},
              {"site_url", v.site_url},
              {"image_ref", v.image_ref}};
    meta["segment_index"] = v.segment_index ? json(*v.segment_index) : json(nullptr);
    j = json{{"instruction", v.instruction}, {"target", std::string(1, v.target)}, {"metadata", std::move(meta)}};
}

void from_json(const json& j, InstructionRecord& v) {
    v.instruction = j.at("instruction").get<std::string>();
    auto target = j.at("target").get<std::string>();
    if (target.size() != 1) throw ParseError("target must be a single letter");
    v.target = target.front();
    const json& meta = j.at("metadata");
    auto kind = meta.at("kind").get<std::string>();
    if (kind == "website") {
        v.kind = RecordKind::website;
    } else if (kind == "content") {
        v.kind = RecordKind::content;
    } else {
        throw ParseError("unknown record kind '" + kind + "'");
    }
    v.sample_id = meta.at("sample_id").get<std::string>();
    v.site_url = meta.value("site_url", std::string{});
    v.image_ref = meta.value("image_ref", std::string{});
    v.segment_index.reset();
    if (meta.contains("segment_index") && !meta["segment_index"].is_null()) {
        v.segment_index = meta["segment_index"].get<std::size_t>();
    }
}

void to_json(json& j, const VoteOutcome& v) {
    j = json{{"sample_id", v.sample_id},
             {"site_url", v.segment.site_url},
             {"segment_index", v.segment.index},
             {"votes", v.votes},
             {"pseudo", v.pseudo},
             {"ground_truth", v.ground_truth}};
}

}  // namespace iag
