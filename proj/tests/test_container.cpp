#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

#include "csc/container.hpp"
#include "csc/cscnet.hpp"
#include "csc/dict.hpp"
#include "csc/errors.hpp"
#include "oracles.hpp"

using namespace csc;

namespace {

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("serialize / deserialize is bit exact") {
    Container c;
    c.kind = ContainerKind::report;
    c.meta = {{"zeta", "last"}, {"alpha", "first"}, {"empty", ""}};
    const double specials[] = {0.0, -0.0, 1e-310, -std::numeric_limits<double>::infinity(),
                               std::numeric_limits<double>::quiet_NaN(), 0.1, 255.0, -1e300};
    c.arrays["b"] = {{2, 4}, std::vector<double>(std::begin(specials), std::end(specials))};
    c.arrays["a"] = {{3}, {1.0, 2.0, 3.0}};
    c.arrays["scalar"] = {{}, {42.0}};
    const auto bytes = serialize(c);
    CHECK(std::memcmp(bytes.data(), "CSCTKIT\n", 8) == 0);
    const Container back = deserialize(bytes);
    CHECK(back.kind == c.kind);
    CHECK(back.meta == c.meta);
    CHECK(back.arrays.size() == 3);
    for (const auto& [name, arr] : c.arrays) {
        CHECK(back.array(name).shape == arr.shape);
        CHECK(bit_equal(back.array(name).values, arr.values));
    }
    CHECK(serialize(back) == bytes);
}

TEST_CASE("malformed containers are data errors") {
    Container c;
    c.arrays["x"] = {{2}, {1.0, 2.0}};
    auto bytes = serialize(c);
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(deserialize(bad_magic), DataError);
    auto truncated = bytes;
    truncated.pop_back();
    CHECK_THROWS_AS(deserialize(truncated), DataError);
    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(deserialize(trailing), DataError);
    auto version = bytes;
    version[8] = 9;
    CHECK_THROWS_AS(deserialize(version), DataError);
    auto kind = bytes;
    kind[12] = 77;
    CHECK_THROWS_AS(deserialize(kind), DataError);
    CHECK_THROWS_AS(deserialize({}), DataError);
    Container wrong;
    wrong.arrays["x"] = {{3}, {1.0}};
    CHECK_THROWS_AS(serialize(wrong), UsageError);
}

TEST_CASE("image, dictionary and checkpoint round trips") {
    const auto dir = std::filesystem::temp_directory_path() / "csc_container_test";
    std::filesystem::create_directories(dir);

    const Image img = oracle::random_image(5, 7, 3, 100.0);
    write_container(dir / "img.bin", to_container(img, {{"sigma", "25"}}));
    CHECK(is_container(dir / "img.bin"));
    CHECK(image_from(read_container(dir / "img.bin")) == img);
    CHECK(read_container(dir / "img.bin").get("sigma") == "25");

    const auto dict = make_overcomplete_dct(5, 7);
    write_container(dir / "dict.bin", to_container(dict));
    const LocalDictionary d2 = dictionary_from(read_container(dir / "dict.bin"));
    CHECK(d2 == dict);
    CHECK_THROWS_AS(image_from(read_container(dir / "dict.bin")), DataError);
    CHECK_THROWS_AS(dictionary_from(read_container(dir / "img.bin")), DataError);

    TrainState st;
    st.params = init_params(3, 4, 3, 2, 2, 8, 8);
    st.params.tau[1] = 0.0371;
    st.params.inv_c = 0.987654321;
    st.adam = make_adam_state(st.params);
    st.adam.first.filters_b[3] = 1e-7;
    st.adam.second.tau[0] = 2.5e-9;
    st.adam.first.inv_c = -0.25;
    st.adam.step = 17;
    st.epochs_done = 3;
    st.loss_history = {10.5, 9.25, 1.0 / 3.0};
    st.lr_history = {1e-3, 1e-3, 7e-4};
    TrainConfig cfg;
    cfg.lr = 1.0 / 3.0;
    cfg.seed = 0xFFFFFFFFFFFFFFFFull;
    cfg.crop_size = 8;
    cfg.steps_per_epoch = 5;
    write_container(dir / "ckpt.bin", to_container(st, cfg));
    const Container cc = read_container(dir / "ckpt.bin");
    const TrainState back = train_state_from(cc);
    CHECK(back.params == st.params);
    CHECK(back.adam.first.filters_b == st.adam.first.filters_b);
    CHECK(back.adam.second.tau == st.adam.second.tau);
    CHECK(back.adam.first.inv_c == st.adam.first.inv_c);
    CHECK(back.adam.step == 17);
    CHECK(back.epochs_done == 3);
    CHECK(bit_equal(back.loss_history, st.loss_history));
    CHECK(back.lr_history == st.lr_history);
    const TrainConfig cfg2 = train_config_from(cc);
    CHECK(cfg2.lr == cfg.lr);
    CHECK(cfg2.seed == cfg.seed);
    CHECK(cfg2.steps_per_epoch == 5);
    CHECK(serialize(to_container(back, cfg2)) == serialize(cc));

    CHECK_FALSE(is_container(dir / "missing.bin"));
    CHECK_THROWS_AS(read_container(dir / "missing.bin"), DataError);
    // no temp files are left behind by the atomic writer
    for (const auto& e : std::filesystem::directory_iterator(dir)) CHECK(e.path().extension() != ".tmp");
    std::filesystem::remove_all(dir);
}
