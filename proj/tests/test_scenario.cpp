#include <doctest.h>

#include "mbetti/app/scenario.hpp"
#include "mbetti/boundary/errors.hpp"

using namespace mbetti;
using nlohmann::json;

TEST_CASE("scenario parsing") {
    const auto s = Scenario::from_json(json::parse(R"({
        "mesh": {"generator": "tunneled_box", "tunnels": 2, "refinement": 1},
        "materials": {"kind": "random", "condition": 5},
        "gamma": {"fraction": 0.25, "seed": 3},
        "seed": 9,
        "method": "physical-maxwell"
    })"));
    CHECK(s.mesh == "tunneled_box");
    CHECK(s.tunnels == 2);
    CHECK(s.condition == 5.0);
    CHECK(s.gamma == 0.25);
    CHECK(s.gamma_seed == 3);
    CHECK(s.seed == 9u);

    const auto back = Scenario::from_json(s.to_json());
    CHECK(back.to_json() == s.to_json());

    CHECK(Scenario::from_json(json::parse(R"({"mesh": "ball", "materials": "identity", "gamma": "all"})")).materials ==
          "identity");
}

TEST_CASE("scenario validation") {
    auto bad = [](const char* text) { return Scenario::from_json(json::parse(text)); };
    CHECK_THROWS_AS(bad(R"({"refinement": 1})"), ValidationError);
    CHECK_THROWS_AS(bad(R"({"mesh": {"generator": "ball", "resolution": 2}})"), ValidationError);
    CHECK_THROWS_AS(bad(R"({"mesh": "klein_bottle"})"), ValidationError);
    CHECK_THROWS_AS(bad(R"({"gamma": 1.5})"), ValidationError);
    CHECK_THROWS_AS(bad(R"({"gamma": "half"})"), ValidationError);
    CHECK_THROWS_AS(bad(R"({"materials": {"kind": "random", "condition": 0.5}})"), ValidationError);
    CHECK_THROWS_AS(bad(R"({"method": "magnetostatic"})"), ValidationError);
    CHECK_THROWS_AS(bad(R"({"n_sources": "eight"})"), ValidationError);
}
