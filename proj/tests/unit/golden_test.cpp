#include <catch_amalgamated.hpp>

#include "../support/golden_cases.hpp"

using namespace iag;

TEST_CASE("rendered prompts match the golden files byte for byte", "[golden]") {
    auto cases = testing::golden_cases(IAG_GOLDEN_DIR);
    REQUIRE(cases.size() == 12);
    for (const auto& c : cases) {
        INFO(c.file);
        CHECK(c.rendered == c.expected);
        CHECK_FALSE(c.expected.empty());
        CHECK(c.expected.back() != '\n');
    }
}

TEST_CASE("golden files differ from each other", "[golden]") {
    auto cases = testing::golden_cases(IAG_GOLDEN_DIR);
    std::set<std::string> distinct;
    for (const auto& c : cases) distinct.insert(c.expected);
    CHECK(distinct.size() == cases.size());
}
