#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "iag/backends/mock.hpp"
#include "iag/core/errors.hpp"
#include "iag/core/jsonl.hpp"
#include "iag/datagen.hpp"
#include "iag/synth.hpp"

using namespace iag;

namespace {

ContentSegment seg(std::string text, std::size_t index = 0) {
    ContentSegment s;
    s.site_url = "https://news.example/a";
    s.index = index;
    s.text = std::move(text);
    return s;
}

QaDraft draft() {
    QaDraft d;
    d.segment = seg("The Detective Conan movie chose Blue Song as its theme song.");
    d.question = "Which song did the Detective Conan movie use as its theme?";
    d.correct = "Blue Song";
    d.distractors = {"Red Song", "Green Song", "Gold Song"};
    return d;
}

}  // namespace

TEST_CASE("Date parsing is strict", "[datagen]") {
    CHECK(Date::parse("2024-04-01") == Date{2024, 4, 1});
    CHECK(Date::parse("2024-02-29").str() == "2024-02-29");
    CHECK(Date::parse("2024-03-31") < Date::parse("2024-04-01"));
    for (const char* bad : {"2023-02-29", "2024-13-01", "2024-04-31", "2024-4-01", "24-04-01", "2024/04/01",
                            "abcd-ef-gh", ""}) {
        CHECK_THROWS_AS(Date::parse(bad), ParseError);
    }
}

TEST_CASE("load_queries merges feeds and drops duplicates", "[datagen]") {
    std::istringstream trends("2024-03-01 alpha premiere\n2024-03-02 beta final\n\n# note\n2024-03-03 gamma\n"
                              "2024-03-04 delta\n2024-03-05 epsilon\n");
    std::istringstream manual("2024-04-02 Alpha  Premiere\n2024-04-03 zeta\n2024-04-04 eta\n2024-02-30 bad\n"
                              "nodate\n");
    Diagnostics diag;
    auto qs = load_queries(trends, manual, &diag);
    REQUIRE(qs.size() == 7);
    CHECK(qs[0].text == "alpha premiere");
    CHECK(qs[0].source == QuerySource::trends_feed);
    CHECK(qs[0].date == Date{2024, 3, 1});
    CHECK(qs[5].text == "zeta");
    CHECK(qs[5].source == QuerySource::manual);
    CHECK(diag.flags().size() == 2);
}

TEST_CASE("QA generation prompt", "[datagen]") {
    CHECK(qa_generation_prompt("CTX") ==
          "Given context: CTX Filling the blanks to generate a question about the most informative event of the "
          "context, generate an correct answer to the question in no more than three words based on context, and "
          "generate three incorrectly confused answers of no more than three words based on context. Question: ___ "
          "Correct answer: ___ Incorrect answers: A. ___ B. ___ C. ___");
}

TEST_CASE("parse_qa_reply", "[datagen]") {
    auto s = seg("x");
    auto d = parse_qa_reply(
        "Question: Who won?\nCorrect answer: Ann Lee.\nIncorrect answers: A. Bo B. Cy Day C. Di", s);
    REQUIRE(d);
    CHECK(d->question == "Who won?");
    CHECK(d->correct == "Ann Lee");
    CHECK(d->distractors == std::array<std::string, 3>{"Bo", "Cy Day", "Di"});

    Diagnostics diag;
    CHECK_FALSE(parse_qa_reply("Question: Who won?\nIncorrect answers: A. Bo B. Cy C. Di", s, &diag));
    CHECK_FALSE(parse_qa_reply("Correct answer: Ann\nIncorrect answers: A. Bo B. Cy C. Di", s, &diag));
    CHECK_FALSE(parse_qa_reply("Question: Q?\nCorrect answer: Ann\nIncorrect answers: A. Bo B. Cy", s, &diag));
    CHECK_FALSE(parse_qa_reply("Question: Q?\nCorrect answer: Ann\nIncorrect answers: A. Bo B. ann C. Di", s, &diag));
    CHECK(diag.flags().size() == 4);

    Diagnostics long_diag;
    auto longer = parse_qa_reply(
        "Question: Q?\nCorrect answer: one two three four\nIncorrect answers: A. Bo B. Cy C. Di", s, &long_diag);
    REQUIRE(longer);
    CHECK(long_diag.flags().size() == 1);
}

TEST_CASE("verify_qa keeps answerable drafts only", "[datagen]") {
    synth::ContextReader reader;
    auto d = draft();
    CHECK(verify_qa(d, reader, 1));
    CHECK(verify_qa(d, reader, 2));
    auto wrong = d;
    std::swap(wrong.correct, wrong.distractors[0]);
    CHECK_FALSE(verify_qa(wrong, reader, 1));
}

TEST_CASE("extract_entity and hypernym_replace", "[datagen]") {
    GazetteerNer ner({"Detective Conan", "Blue Song"});
    auto q = draft().question;
    CHECK(extract_entity(q, ner) == "Detective Conan");
    CHECK_FALSE(extract_entity("Where did they gather?", ner));

    TableHypernyms hyp(std::map<std::string, std::string>{{"Detective Conan", "anime franchise"},
                                                          {"Blue Song", "Blue Song"}});
    auto r = hypernym_replace(q, "Detective Conan", hyp);
    REQUIRE(r);
    CHECK(r->question == "Which song did the anime franchise movie use as its theme?");
    CHECK(r->hypernym == "anime franchise");
    CHECK(r->question.find("Detective Conan") == std::string::npos);

    Diagnostics diag;
    CHECK_FALSE(hypernym_replace("Is Blue Song good?", "Blue Song", hyp, &diag));
    CHECK_FALSE(hypernym_replace("Is Lupin good?", "Lupin", hyp, &diag));
    CHECK(diag.flags().size() == 2);
    CHECK_THROWS_AS(hypernym_replace(q, "Lupin", hyp), PreconditionError);
}

TEST_CASE("assign_images keeps the dominant cluster", "[datagen]") {
    std::vector<std::string> refs;
    for (int k = 0; k < 10; ++k) {
        refs.push_back((k == 2 || k == 6 ? "img://e/x" : "img://e/") + std::to_string(k));
    }
    StaticImageSearch images({{"Entity", refs}});
    synth::ClusteredImageEmbedder emb(32, 3);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto kept = assign_images("Entity", images, emb, 3, seed);
        REQUIRE(kept.size() == 8);
        for (const auto& k : kept) CHECK(k.find("/x") == std::string::npos);
        CHECK(kept.front() == "img://e/0");
    }
    CHECK(assign_images("Nobody", images, emb, 3, 0).empty());
}

TEST_CASE("assemble_sample produces a valid five-option sample", "[datagen]") {
    auto d = draft();
    std::set<char> letters;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        auto s = assemble_sample(d, "img://e/0", "id1", seed);
        CHECK(check_options(s).empty());
        REQUIRE(s.gt_letter);
        CHECK(s.options.at(*s.gt_letter) == "Blue Song");
        CHECK(s.options.at('E') == kComplementOption);
        CHECK(s.gt_segment == d.segment);
        CHECK(s == assemble_sample(d, "img://e/0", "id1", seed));
        letters.insert(*s.gt_letter);
    }
    CHECK(letters == std::set<char>{'A', 'B', 'C', 'D'});
}

TEST_CASE("temporal_split uses the source query date", "[datagen]") {
    auto base = assemble_sample(draft(), "img://e/0", "a", 0);
    std::vector<VqaSample> samples;
    std::map<std::string, Date> dates{{"q1", {2024, 3, 31}}, {"q2", {2024, 4, 1}}, {"q3", {2024, 4, 30}}};
    for (const char* q : {"q1", "q2", "q3", "q4"}) {
        auto s = base;
        s.id = std::string("s-") + q;
        s.source_query = q;
        samples.push_back(s);
    }
    auto nosrc = base;
    nosrc.source_query.reset();
    samples.push_back(nosrc);
    Diagnostics diag;
    auto split = temporal_split(samples, dates, {2024, 4, 1}, &diag);
    REQUIRE(split.train.size() == 1);
    REQUIRE(split.test.size() == 2);
    CHECK(split.train[0].id == "s-q1");
    CHECK(split.test[0].id == "s-q2");
    CHECK(diag.flags().size() == 2);
}

TEST_CASE("review round trip keeps only accepted samples", "[datagen]") {
    auto dir = std::filesystem::temp_directory_path() / "iag_datagen_review";
    std::filesystem::create_directories(dir);
    auto path = dir / "review.jsonl";
    std::vector<VqaSample> samples;
    for (int i = 0; i < 3; ++i) samples.push_back(assemble_sample(draft(), "img://e/0", "s" + std::to_string(i), i));
    write_review(path, samples);
    auto lines = read_jsonl<json>(path);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0]["keep"].is_null());
    lines[0]["keep"] = true;
    lines[1]["keep"] = false;
    {
        std::ofstream out(path);
        for (const auto& l : lines) out << l.dump() << '\n';
    }
    Diagnostics diag;
    auto kept = read_review(path, &diag);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0] == samples[0]);
    CHECK(diag.flags().size() == 1);
    std::filesystem::remove_all(dir);
}

TEST_CASE("generate_samples on the synthetic news world", "[datagen]") {
    auto world = synth::make_datagen_world(0);
    std::istringstream trends(world.trends_text), manual(world.manual_text);
    Diagnostics load_diag;
    auto queries = load_queries(trends, manual, &load_diag);
    REQUIRE(queries.size() == 20);
    CHECK(load_diag.flags().size() == 1);

    DatagenOptions opts;
    opts.seed = 5;
    auto result = generate_samples(queries, world.backends, opts);
    DatagenStats expect;
    expect.queries = 20;
    expect.queries_without_news = 2;  // failing search, unreachable page
    expect.segments = 36;
    expect.rejected_parse = 1;
    expect.rejected_verify = 1;
    expect.no_entity = 1;
    expect.no_hypernym = 2;
    expect.no_images = 2;
    expect.samples = 29;
    CHECK(json(result.stats) == json(expect));
    REQUIRE(result.samples.size() == 29);

    std::set<std::string> ids;
    for (const auto& s : result.samples) {
        CHECK(check_options(s).empty());
        CHECK(s.source_query);
        CHECK(s.gt_segment);
        CHECK(result.news_segments.count(s.id) == 1);
        CHECK(result.news_hits.count(s.id) == 1);
        for (const auto& e : world.entities) CHECK(s.question.find(e) == std::string::npos);
        CHECK(s.image_ref.find("/x") == std::string::npos);
        ids.insert(s.id);
    }
    CHECK(ids.size() == result.samples.size());

    opts.workers = 4;
    auto parallel = generate_samples(queries, world.backends, opts);
    CHECK(parallel.samples == result.samples);

    std::map<std::string, Date> dates;
    for (const auto& q : queries) dates[q.text] = q.date;
    auto split = temporal_split(result.samples, dates, {2024, 4, 1});
    CHECK(split.train.size() + split.test.size() == result.samples.size());
    CHECK(split.test.size() >= 10);
}
