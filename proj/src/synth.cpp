#include "iag/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "iag/backends/mock.hpp"
#include "iag/core/errors.hpp"
#include "iag/core/rng.hpp"
#include "iag/core/text.hpp"
#include "iag/core/url.hpp"
#include "iag/hierfilter.hpp"
#include "iag/querygen.hpp"

namespace iag::synth {

namespace {

constexpr std::string_view kMcqPrefix = "Given context: ";
constexpr std::string_view kMcqTail =
    " Answer with the option's letter from the given choices directly based on the context and the image.";
constexpr std::string_view kQaMarker = " Filling the blanks to generate a question";

const std::vector<std::string> kSyllables = {"ka",  "lo",  "mi",  "ren", "tas", "vo",  "zu",  "bel",
                                             "dor", "fin", "gal", "hu",  "jin", "kor", "lum", "nex",
                                             "pra", "quo", "sil", "tor", "ul",  "vex", "wim", "yar"};

const std::vector<std::string> kVocabulary = {
    "river",   "market",  "council", "budget",  "weather", "school",   "harbor",    "bridge",  "library",
    "garden",  "station", "museum",  "factory", "village", "highway",  "forest",    "airport", "stadium",
    "clinic",  "theater", "report",  "meeting", "season",  "project",  "volunteer", "survey",  "traffic",
    "energy",  "water",   "housing", "transit", "orchard", "canal",    "tower",     "plaza",   "ferry",
    "bakery",  "archive", "gallery", "parade",  "harvest", "island",   "valley",    "lantern", "compass",
    "journal", "ledger",  "signal",  "beacon",  "quarry",  "meadow",   "pier",      "depot",   "avenue",
    "courtyard", "window", "ticket", "schedule", "permit", "workshop"};

const std::vector<std::string> kBoilerplate = {
    "Subscribe to our newsletter for daily updates. Our editors select the most important stories every "
    "morning. You can unsubscribe at any time.",
    "This site uses cookies to improve your experience. By continuing to browse you accept our cookie policy. "
    "Manage your preferences in the settings page.",
    "Advertising helps keep our reporting free. Please consider supporting local journalism. Thank you for "
    "reading.",
    "Follow us on social media for breaking news alerts. Share this story with your friends. Comments are "
    "moderated before publication.",
    "Our newsroom corrects errors as soon as they are found. Send corrections to the standards desk. Each "
    "correction is noted at the end of the article.",
    "Photos on this page are provided by our partners. Reproduction requires written permission. Contact the "
    "licensing team for details."};

double unit(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

std::vector<std::string> sentences_of(const std::string& block) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < block.size(); ++i) {
        if (block[i] == '.' && (i + 1 == block.size() || block[i + 1] == ' ')) {
            out.emplace_back(trim(std::string_view(block).substr(start, i + 1 - start)));
            start = i + 1;
        }
    }
    return out;
}

std::string capitalized(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

std::string random_sentence(std::mt19937_64& rng, std::size_t words) {
    std::uniform_int_distribution<std::size_t> pick(0, kVocabulary.size() - 1);
    std::string s;
    for (std::size_t w = 0; w < words; ++w) {
        if (w) s += ' ';
        s += kVocabulary[pick(rng)];
    }
    return capitalized(s) + ".";
}

std::string planted_text(const std::string& topic, const std::string& answer) {
    return "At the " + topic + " awards ceremony the top prize went to " + answer +
           ". The jury praised the winning entry for its originality. Organizers expect a larger audience next "
           "year.";
}

std::vector<double> hashed_direction(std::uint64_t state, std::size_t dim) {
    std::vector<double> v(dim);
    double norm = 0.0;
    for (auto& x : v) {
        state = splitmix64(state);
        x = unit(state) * 2.0 - 1.0;
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

}  // namespace

std::string make_name(std::mt19937_64& rng, int syllables) {
    std::uniform_int_distribution<std::size_t> pick(0, kSyllables.size() - 1);
    std::string s;
    for (int i = 0; i < syllables; ++i) s += kSyllables[pick(rng)];
    return capitalized(s);
}

std::optional<McqView> parse_mcq_prompt(const std::string& prompt) {
    if (prompt.rfind(kMcqPrefix, 0) != 0 || prompt.size() < kMcqPrefix.size() + kMcqTail.size()) return std::nullopt;
    if (prompt.compare(prompt.size() - kMcqTail.size(), kMcqTail.size(), kMcqTail) != 0) return std::nullopt;
    const std::size_t body_end = prompt.size() - kMcqTail.size();

    auto answers = prompt.rfind(" Answers: A.", body_end);
    if (answers == std::string::npos) return std::nullopt;
    auto question = prompt.rfind(" Question: ", answers);
    if (question == std::string::npos || question < kMcqPrefix.size()) return std::nullopt;

    McqView view;
    view.context = prompt.substr(kMcqPrefix.size(), question - kMcqPrefix.size());
    view.question = prompt.substr(question + 11, answers - question - 11);

    std::string rest = prompt.substr(answers + 10, body_end - answers - 10);
    const std::string e_suffix = " E." + std::string(kComplementOption);
    if (rest.size() >= e_suffix.size() && rest.compare(rest.size() - e_suffix.size(), e_suffix.size(), e_suffix) == 0) {
        view.options['E'] = std::string(kComplementOption);
        rest.resize(rest.size() - e_suffix.size());
    }
    std::array<std::size_t, 5> starts{};
    starts[0] = 0;
    for (int i = 1; i < 4; ++i) {
        std::string marker = std::string(" ") + static_cast<char>('A' + i) + ".";
        starts[i] = rest.find(marker, starts[i - 1] + 2);
        if (starts[i] == std::string::npos) return std::nullopt;
        starts[i] += 1;
    }
    starts[4] = rest.size() + 1;
    for (int i = 0; i < 4; ++i) {
        view.options[static_cast<char>('A' + i)] = rest.substr(starts[i] + 2, starts[i + 1] - starts[i] - 3);
    }
    return view;
}

bool near_duplicate(const std::string& a, const std::string& b) {
    auto words_a = split_whitespace(to_lower(a));
    auto words_b = split_whitespace(to_lower(b));
    std::set<std::string> sa(words_a.begin(), words_a.end());
    std::set<std::string> sb(words_b.begin(), words_b.end());
    if (sa.empty() && sb.empty()) return true;
    std::size_t common = 0;
    for (const auto& w : sa) common += sb.count(w);
    std::size_t total = sa.size() + sb.size() - common;
    return static_cast<double>(common) >= 0.8 * static_cast<double>(total);
}

ContextReader::ContextReader(std::vector<std::string> gazetteer, std::vector<Fact> facts)
    : gazetteer_(std::move(gazetteer)), facts_(std::move(facts)) {}

char ContextReader::answer_mcq(const McqView& view, const std::string& prompt) {
    char best = 0;
    std::size_t best_count = 0;
    for (const auto& [letter, text] : view.options) {
        if (letter == kComplementLetter || text.empty()) continue;
        std::size_t c = icount(view.context, text);
        if (c > best_count) {
            best_count = c;
            best = letter;
        }
    }
    if (best) return best;
    return "ABCDE"[fnv1a64(prompt) % 5];
}

std::string ContextReader::generate(const std::string& prompt, const ImageRef&) const {
    if (auto view = parse_mcq_prompt(prompt)) return std::string(1, answer_mcq(*view, prompt));

    if (prompt.rfind(kMcqPrefix, 0) == 0) {
        auto end = prompt.find(kQaMarker);
        if (end == std::string::npos) return {};
        std::string_view content = std::string_view(prompt).substr(kMcqPrefix.size(), end - kMcqPrefix.size());
        for (const auto& f : facts_) {
            if (content.find(f.key) != std::string_view::npos) return f.reply;
        }
        return {};
    }

    if (prompt.rfind("Question: ", 0) == 0 && prompt.find(kQuestionQueryInstruction) != std::string::npos) {
        std::string_view question = std::string_view(prompt).substr(10, prompt.find('\n') - 10);
        for (const auto& entry : gazetteer_) {
            if (icontains(question, entry)) return entry;
        }
    }
    return {};
}

DuplicatePenalizingReader::DuplicatePenalizingReader(std::shared_ptr<const GeneratorBackend> inner)
    : inner_(std::move(inner)) {}

std::string DuplicatePenalizingReader::generate(const std::string& prompt, const ImageRef& image_ref) const {
    if (auto view = parse_mcq_prompt(prompt)) {
        std::vector<std::string> segs;
        std::size_t start = 0;
        while (start <= view->context.size()) {
            auto nl = view->context.find('\n', start);
            if (nl == std::string::npos) nl = view->context.size();
            if (nl > start) segs.push_back(view->context.substr(start, nl - start));
            start = nl + 1;
        }
        std::size_t with_dup = 0;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            for (std::size_t j = 0; j < segs.size(); ++j) {
                if (i != j && near_duplicate(segs[i], segs[j])) {
                    ++with_dup;
                    break;
                }
            }
        }
        if (segs.size() >= 2 && 2 * with_dup > segs.size()) return "Unclear from the reports.";
    }
    return inner_->generate(prompt, image_ref);
}

FallibleReader::FallibleReader(std::shared_ptr<const GeneratorBackend> inner, double error_rate, std::uint64_t seed)
    : inner_(std::move(inner)), error_rate_(error_rate), seed_(seed) {}

std::string FallibleReader::generate(const std::string& prompt, const ImageRef& image_ref) const {
    std::string reply = inner_->generate(prompt, image_ref);
    auto view = parse_mcq_prompt(prompt);
    if (!view || error_rate_ <= 0.0) return reply;
    std::uint64_t h = splitmix64(seed_ ^ fnv1a64(prompt));
    if (unit(h) >= error_rate_) return reply;
    std::string letters;
    for (const auto& [letter, text] : view->options) {
        if (reply.empty() || letter != reply.front()) letters += letter;
    }
    return std::string(1, letters[splitmix64(h) % letters.size()]);
}

AnswerKeyScorer::AnswerKeyScorer(std::map<std::string, std::string> answers, double noise, std::uint64_t seed)
    : answers_(std::move(answers)), noise_(noise), seed_(seed) {}

char AnswerKeyScorer::score_option(const std::string& instruction, const ImageRef&) const {
    char letter = 'F';
    auto q = instruction.rfind(" Question: ");
    auto o = instruction.rfind(" Options: ");
    if (q != std::string::npos && o != std::string::npos && o > q) {
        auto it = answers_.find(instruction.substr(q + 11, o - q - 11));
        if (it != answers_.end() && icontains(scored_field(instruction), it->second)) letter = 'A';
    }
    if (noise_ > 0.0) {
        std::uint64_t h = splitmix64(seed_ ^ fnv1a64(instruction));
        if (unit(h) < noise_) letter = static_cast<char>('A' + splitmix64(h) % 6);
    }
    return letter;
}

// ---------------------------------------------------------------------------
// Planted-answer world

struct SyntheticWorld::State {
    WorldOptions options;
    std::vector<VqaSample> samples;
    std::vector<PlantedInfo> planted;
    std::vector<std::string> slugs;
    std::map<std::string, std::size_t> by_slug;
    std::map<std::string, std::size_t> by_topic;
    std::vector<std::vector<bool>> unavailable;
    std::vector<std::map<std::size_t, std::size_t>> answer_at;  // site -> segment
    std::map<std::string, std::string> answer_key;

    std::string url(std::size_t i, std::size_t j) const {
        return "https://site" + std::to_string(j) + "." + slugs.at(i) + ".example/story";
    }

    std::vector<std::string> sentences(std::size_t i, std::size_t j) const {
        std::vector<std::string> out;
        auto ans = answer_at.at(i).find(j);
        for (std::size_t s = 0; s < options.segments_per_site; ++s) {
            std::vector<std::string> block;
            if (ans != answer_at[i].end() && ans->second == s) {
                block = sentences_of(planted[i].answer_text);
            } else if (options.duplicate_copies == 0) {
                std::uint64_t h = derive_seed(options.seed, "filler/" + std::to_string(i) + "/" + std::to_string(j) +
                                                                "/" + std::to_string(s));
                block = sentences_of(kBoilerplate[h % std::min(options.boilerplate_blocks, kBoilerplate.size())]);
            } else {
                std::mt19937_64 rng(derive_seed(options.seed, "unique/" + std::to_string(i) + "/" +
                                                                  std::to_string(j) + "/" + std::to_string(s)));
                for (int k = 0; k < 3; ++k) block.push_back(random_sentence(rng, 8));
            }
            out.insert(out.end(), block.begin(), block.end());
        }
        return out;
    }

    std::string html(std::size_t i, std::size_t j) const {
        auto sents = sentences(i, j);
        std::string page = "<!DOCTYPE html><html><head><title>" + planted[i].topic +
                           " report</title><script>var tracker = 'x. y. z.';</script></head><body>"
                           "<nav>Home | World | Culture</nav><header><h1>" +
                           planted[i].topic + " report</h1></header><main>";
        for (std::size_t s = 0; s < sents.size(); s += 3) {
            page += "<p>";
            for (std::size_t k = s; k < std::min(s + 3, sents.size()); ++k) {
                if (k > s) page += ' ';
                page += sents[k];
            }
            page += "</p>\n";
        }
        page += "</main><footer>Copyright the publisher.</footer></body></html>";
        return page;
    }

    std::vector<SearchHit> hits(std::size_t i) const {
        std::vector<SearchHit> out;
        for (std::size_t j = 0; j < options.sites; ++j) {
            SearchHit h;
            h.url = url(i, j);
            h.title = planted[i].topic + " coverage part " + std::to_string(j + 1);
            if (answer_at[i].count(j)) {
                std::string first = sentences_of(planted[i].answer_text).front();
                first.pop_back();
                h.snippet = first + " ...";
            } else {
                auto words = split_whitespace(sentences(i, j).front());
                if (words.size() > 6) words.resize(6);
                h.snippet = join(words, " ") + " ...";
            }
            h.rank = static_cast<int>(j) + 1;
            out.push_back(std::move(h));
        }
        return out;
    }
};

namespace {

class WorldSearch final : public WebSearchBackend {
public:
    explicit WorldSearch(std::shared_ptr<const SyntheticWorld::State> s) : s_(std::move(s)) {}
    std::vector<SearchHit> search(const Query& query, std::size_t limit) const override {
        auto it = s_->by_topic.find(to_lower(query.text()));
        if (it == s_->by_topic.end()) return {};
        auto hits = s_->hits(it->second);
        if (hits.size() > limit) hits.resize(limit);
        for (auto& h : hits) h.query_origin = query;
        return hits;
    }

private:
    std::shared_ptr<const SyntheticWorld::State> s_;
};

class WorldFetcher final : public Fetcher {
public:
    explicit WorldFetcher(std::shared_ptr<const SyntheticWorld::State> s) : s_(std::move(s)) {}
    FetchResponse fetch(const std::string& url) const override {
        UrlParts parts = split_url(url);
        auto dot = parts.host.find('.');
        auto rest = dot == std::string::npos ? std::string() : parts.host.substr(dot + 1);
        auto slug = rest.substr(0, rest.find('.'));
        auto it = s_->by_slug.find(slug);
        if (parts.host.rfind("site", 0) != 0 || it == s_->by_slug.end()) {
            throw BackendUnavailable(url + ": host not found", 1);
        }
        std::size_t j = std::stoul(parts.host.substr(4, dot - 4));
        if (j >= s_->options.sites || s_->unavailable[it->second][j]) {
            throw BackendUnavailable(url + ": connection refused", 1);
        }
        return {200, "text/html; charset=utf-8", s_->html(it->second, j)};
    }

private:
    std::shared_ptr<const SyntheticWorld::State> s_;
};

class WorldVisual final : public VisualSearchBackend {
public:
    explicit WorldVisual(std::shared_ptr<const SyntheticWorld::State> s) : s_(std::move(s)) {}
    VisualSearchResult lookup(const std::string& image_ref) const override {
        constexpr std::string_view prefix = "img://";
        if (image_ref.rfind(prefix, 0) == 0) {
            auto it = s_->by_slug.find(image_ref.substr(prefix.size()));
            if (it != s_->by_slug.end()) {
                VisualSearchResult r;
                r.entity_name = s_->planted[it->second].topic;
                return r;
            }
        }
        throw BackendUnavailable("unknown image " + image_ref, 1);
    }

private:
    std::shared_ptr<const SyntheticWorld::State> s_;
};

}  // namespace

SyntheticWorld::SyntheticWorld(WorldOptions options) {
    if (options.sites == 0 || options.segments_per_site == 0) throw ParameterError("world needs sites and segments");
    if (options.duplicate_copies > options.sites) throw ParameterError("more answer copies than sites");
    if (options.boilerplate_blocks == 0) throw ParameterError("need at least one boilerplate block");

    auto st = std::make_shared<State>();
    st->options = options;
    std::set<std::string> used;
    for (std::size_t i = 0; i < options.samples; ++i) {
        std::mt19937_64 rng(derive_seed(options.seed, "sample/" + std::to_string(i)));
        auto fresh = [&](int syllables, int words) {
            for (;;) {
                std::string n = make_name(rng, syllables);
                for (int w = 1; w < words; ++w) n += " " + make_name(rng, 2);
                if (used.insert(to_lower(n)).second) return n;
            }
        };
        std::string topic = fresh(3, 1);
        std::string answer;
        std::array<std::string, 3> wrong;
        for (;;) {
            answer = fresh(3, 2);
            for (auto& w : wrong) w = fresh(3, 2);
            std::vector<std::string> all{answer, wrong[0], wrong[1], wrong[2]};
            bool nested = false;
            for (const auto& a : all) {
                for (const auto& b : all) nested |= (&a != &b && icontains(a, b));
            }
            if (!nested) break;
        }

        PlantedInfo info;
        info.topic = topic;
        info.answer = answer;
        info.answer_text = planted_text(topic, answer);

        std::vector<std::size_t> sites(options.sites);
        for (std::size_t j = 0; j < sites.size(); ++j) sites[j] = j;
        std::shuffle(sites.begin(), sites.end(), rng);
        std::size_t copies = std::max<std::size_t>(1, options.duplicate_copies);
        sites.resize(copies);
        std::sort(sites.begin(), sites.end());
        std::uniform_int_distribution<std::size_t> seg_pick(0, options.segments_per_site - 1);
        std::map<std::size_t, std::size_t> at;
        for (auto j : sites) {
            at[j] = seg_pick(rng);
            info.answer_sites.push_back(j);
            info.answer_segments.push_back(at[j]);
        }

        std::vector<bool> down(options.sites, false);
        for (std::size_t j = 0; j < options.sites; ++j) {
            if (!at.count(j) && unit(rng()) < options.unavailable_fraction) down[j] = true;
        }

        st->slugs.push_back(to_lower(topic));
        st->by_slug[to_lower(topic)] = i;
        st->by_topic[to_lower(topic)] = i;
        st->planted.push_back(std::move(info));
        st->answer_at.push_back(std::move(at));
        st->unavailable.push_back(std::move(down));

        const PlantedInfo& p = st->planted.back();
        QaDraft draft;
        draft.segment.site_url = st->url(i, p.answer_sites.front());
        draft.segment.index = p.answer_segments.front();
        draft.segment.text = p.answer_text;
        draft.segment.sentence_count = 3;
        draft.segment.token_count = count_tokens(p.answer_text);
        draft.segment.first_sentence = p.answer_segments.front() * 3;
        draft.question = "Who received the top prize at the " + topic + " awards ceremony?";
        draft.correct = answer;
        draft.distractors = wrong;

        char id[32];
        std::snprintf(id, sizeof id, "syn-%04zu", i);
        VqaSample sample = assemble_sample(draft, "img://" + to_lower(topic), id, rng());
        sample.category = kAllCategories[i % kAllCategories.size()];
        sample.source_query = topic;
        st->answer_key[sample.question] = answer;
        st->samples.push_back(std::move(sample));
    }
    state_ = std::move(st);
}

const WorldOptions& SyntheticWorld::options() const {
    return state_->options;
}

const std::vector<VqaSample>& SyntheticWorld::samples() const {
    return state_->samples;
}

const PlantedInfo& SyntheticWorld::planted(std::size_t sample) const {
    return state_->planted.at(sample);
}

std::string SyntheticWorld::site_url(std::size_t sample, std::size_t site) const {
    return state_->url(sample, site);
}

bool SyntheticWorld::site_available(std::size_t sample, std::size_t site) const {
    return !state_->unavailable.at(sample).at(site);
}

std::vector<std::string> SyntheticWorld::page_sentences(std::size_t sample, std::size_t site) const {
    return state_->sentences(sample, site);
}

std::string SyntheticWorld::page_html(std::size_t sample, std::size_t site) const {
    return state_->html(sample, site);
}

std::vector<SearchHit> SyntheticWorld::hits(std::size_t sample) const {
    return state_->hits(sample);
}

std::shared_ptr<const WebSearchBackend> SyntheticWorld::search() const {
    return std::make_shared<WorldSearch>(state_);
}

std::shared_ptr<const Fetcher> SyntheticWorld::fetcher() const {
    return std::make_shared<WorldFetcher>(state_);
}

std::shared_ptr<const VisualSearchBackend> SyntheticWorld::visual() const {
    return std::make_shared<WorldVisual>(state_);
}

std::shared_ptr<const GeneratorBackend> SyntheticWorld::reader() const {
    std::vector<std::string> topics;
    for (const auto& p : state_->planted) topics.push_back(p.topic);
    return std::make_shared<ContextReader>(std::move(topics));
}

std::shared_ptr<const GeneratorBackend> SyntheticWorld::duplicate_penalizing_reader() const {
    return std::make_shared<DuplicatePenalizingReader>(reader());
}

std::shared_ptr<const ScorerBackend> SyntheticWorld::scorer(double noise, std::uint64_t seed) const {
    return std::make_shared<AnswerKeyScorer>(state_->answer_key, noise, seed);
}

std::shared_ptr<const EmbedderBackend> SyntheticWorld::embedder() const {
    return std::make_shared<HashEmbedder>(32, state_->options.seed);
}

// ---------------------------------------------------------------------------
// Image clusters and the sample-generation world

ClusteredImageEmbedder::ClusteredImageEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}

std::vector<double> ClusteredImageEmbedder::embed(const EmbedInput& input) const {
    if (input.kind == EmbedInput::Kind::text) return hashed_direction(seed_ ^ fnv1a64("text:" + input.value), dim_);
    const std::string& ref = input.value;
    auto slash = ref.rfind('/');
    std::string group = slash == std::string::npos ? ref : ref.substr(0, slash);
    std::string item = slash == std::string::npos ? std::string() : ref.substr(slash + 1);
    if (!item.empty() && item.front() == 'x') return hashed_direction(seed_ ^ fnv1a64("outlier:" + ref), dim_);
    auto base = hashed_direction(seed_ ^ fnv1a64("group:" + group), dim_);
    auto jitter = hashed_direction(seed_ ^ fnv1a64("jitter:" + ref), dim_);
    for (std::size_t d = 0; d < dim_; ++d) base[d] += 0.05 * jitter[d];
    return base;
}

DatagenWorld make_datagen_world(std::uint64_t seed) {
    constexpr std::size_t kQueries = 20;
    const std::vector<std::string> hypernym_pool = {"anime franchise", "video game", "boy band", "sports club",
                                                    "film studio"};
    const std::vector<std::string> place_pool = {"the city arena", "the harbor hall", "the old theater",
                                                 "the central park", "the river stage"};

    std::mt19937_64 rng(derive_seed(seed, "datagen-world"));
    std::set<std::string> used;
    auto fresh = [&](int words) {
        for (;;) {
            std::string n = make_name(rng, 3);
            for (int w = 1; w < words; ++w) n += " " + make_name(rng, 2);
            if (used.insert(to_lower(n)).second) return n;
        }
    };

    std::map<std::string, std::vector<SearchHit>> results;
    std::set<std::string> failing;
    std::map<std::string, FetchResponse> pages;
    std::vector<ContextReader::Fact> facts;
    std::map<std::string, std::string> hypernyms;
    std::map<std::string, std::vector<std::string>> images;
    std::vector<std::string> entities;

    DatagenWorld world;
    for (std::size_t i = 0; i < kQueries; ++i) {
        std::string entity = fresh(2);
        entities.push_back(entity);
        std::string song = fresh(1) + " Song";
        std::array<std::string, 3> songs_wrong{fresh(1) + " Song", fresh(1) + " Song", fresh(1) + " Song"};
        std::string place = place_pool[i % place_pool.size()];
        std::string query = entity + " premiere";

        // Feb 17 .. Mar 31 for the first twelve queries, April for the rest.
        int day_of_span = static_cast<int>(i) * 3;
        Date d = i < 12 ? (day_of_span < 13 ? Date{2024, 2, 17 + day_of_span} : Date{2024, 3, day_of_span - 12})
                        : Date{2024, 4, 1 + static_cast<int>(i - 12) * 4};
        world.trends_text += d.str() + " " + query + "\n";

        std::string url = "https://news.example/" + to_lower(make_name(rng, 2)) + "-" + std::to_string(i);
        SearchHit hit;
        hit.url = normalize_url(url);
        hit.title = entity + " premiere draws crowds";
        hit.snippet = "The " + entity + " movie chose " + song + " ...";
        hit.rank = 1;
        results[query] = {hit};
        if (i == 3) failing.insert(query);

        std::string seg0 = "The " + entity + " movie chose " + song +
                           " as its theme song. Fans had speculated about the choice for weeks. The announcement "
                           "came during a press event.";
        std::string seg1 = entity + " fans gathered at " + place +
                           " for the premiere. Tickets sold out within hours. Organizers added extra screenings.";
        std::string html = "<html><body><article><p>" + seg0 + "</p><p>" + seg1 + "</p></article></body></html>";
        if (i != 7) pages[hit.url] = {200, "text/html", html};

        std::string q0 = "Which song did the " + entity + " movie use as its theme?";
        std::string correct0 = song;
        std::array<std::string, 3> wrong0 = songs_wrong;
        if (i == 17) {
            // The claimed answer is not in the segment, one distractor is.
            correct0 = songs_wrong[0];
            wrong0[0] = song;
        }
        facts.push_back({seg0.substr(0, seg0.find('.') + 1),
                         "Question: " + q0 + "\nCorrect answer: " + correct0 + "\nIncorrect answers: A. " + wrong0[0] +
                             " B. " + wrong0[1] + " C. " + wrong0[2]});

        std::string q1 = i == 5 ? "Where did the fans gather for the premiere?"
                                : "Where did " + entity + " fans gather for the premiere?";
        std::array<std::string, 3> wrong1{place_pool[(i + 1) % 5], place_pool[(i + 2) % 5], place_pool[(i + 3) % 5]};
        std::string reply1 = i == 11 ? "Question: " + q1 + "\nIncorrect answers: A. " + wrong1[0]
                                     : "Question: " + q1 + "\nCorrect answer: " + place + "\nIncorrect answers: A. " +
                                           wrong1[0] + " B. " + wrong1[1] + " C. " + wrong1[2];
        facts.push_back({seg1.substr(0, seg1.find('.') + 1), reply1});

        if (i != 14) hypernyms[entity] = hypernym_pool[i % hypernym_pool.size()];
        std::string slug = "img://" + to_lower(entity.substr(0, entity.find(' ')));
        std::vector<std::string> refs;
        if (i != 9) {
            for (int k = 0; k < 10; ++k) {
                refs.push_back(k == 2 || k == 6 ? slug + "/x" + std::to_string(k) : slug + "/" + std::to_string(k));
            }
        }
        images[entity] = refs;
    }
    world.manual_text = "# hand-picked\n" + world.trends_text.substr(0, world.trends_text.find('\n') + 1) +
                        "2024-02-30 impossible date entry\n";

    world.entities = entities;
    world.backends.search = std::make_shared<StaticWebSearch>(std::move(results), std::move(failing));
    world.backends.fetcher = std::make_shared<StaticFetcher>(std::move(pages));
    world.backends.llm = std::make_shared<ContextReader>(std::vector<std::string>{}, std::move(facts));
    world.backends.ner = std::make_shared<GazetteerNer>(entities);
    world.backends.hypernyms = std::make_shared<TableHypernyms>(std::move(hypernyms));
    world.backends.images = std::make_shared<StaticImageSearch>(std::move(images));
    world.backends.embedder = std::make_shared<ClusteredImageEmbedder>(32, seed);
    return world;
}

}  // namespace iag::synth
