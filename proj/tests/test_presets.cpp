#include <doctest.h>

#include <set>

#include "enc/presets.hpp"

using namespace enc;

TEST_SUITE("presets") {
  TEST_CASE("catalogue shape") {
    const auto all = presets();
    CHECK(all.size() == 39);
    std::set<std::string> names;
    int semi = 0;
    for (const Preset& p : all) {
      CAPTURE(p.name);
      CHECK(names.insert(p.name).second);
      CHECK(p.name.rfind("enc-" + std::string(to_string(p.hp.backbone)) + "-" + p.dataset, 0) == 0);
      CHECK_NOTHROW(p.hp.validate());
      CHECK(p.hp.layers == 2);
      CHECK(p.hp.lambda == 2);
      CHECK(p.hp.sigma == 10);
      if (p.table == "semi-supervised") {
        ++semi;
        CHECK(p.split == "public");
      } else {
        CHECK(p.table == "fully-supervised");
        CHECK(p.split == "geom");
        CHECK(p.name.ends_with("-full"));
      }
    }
    CHECK(semi == 9);
  }

  TEST_CASE("rows are copied verbatim") {
    const Preset& gcn = find_preset("enc-gcn-cora");
    CHECK(gcn.cells == std::array<std::string_view, 9>{"1e-3", "0.01", "1e-5", "1e-5", "64", "0.6", "1.0", "2.0", "1.0"});
    CHECK(gcn.hp.lr_gnn == 1e-3);
    CHECK(gcn.hp.lr_oc == 0.01);
    CHECK(gcn.hp.wd_gnn == 1e-5);
    CHECK(gcn.hp.channels == 64);
    CHECK(gcn.hp.dropout == 0.6);
    CHECK(gcn.hp.alpha == 1.0);
    CHECK(gcn.hp.beta == 2.0);
    CHECK(gcn.hp.gamma == 1.0);
    CHECK(gcn.hp.backbone == Backbone::Gcn);

    const Preset& gcnii = find_preset("enc-gcnii-pubmed");
    CHECK(gcnii.hp.wd_gnn == 0.05);
    CHECK(gcnii.hp.alpha == 0.6);
    CHECK(gcnii.hp.beta == 1.6);
    CHECK(gcnii.hp.backbone == Backbone::Gcnii);

    const Preset& actor = find_preset("enc-gcn-actor-full");
    CHECK(actor.hp.beta == 4.4);
    CHECK(actor.hp.gamma == 1.8);

    const Preset& arxiv = find_preset("enc-gat-ogbn-arxiv-full");
    CHECK(arxiv.hp.dropout == 0);
    CHECK(arxiv.hp.wd_oc == 0);
    CHECK(arxiv.hp.channels == 256);

    const Preset& garbled = find_preset("enc-gcn-cora-full");
    CHECK(garbled.cells[3] == "53-4");
    CHECK(garbled.hp.wd_oc == 5e-4);
  }

  TEST_CASE("lookup and dump") {
    try {
      find_preset("enc-gcn-nowhere");
      FAIL("expected an exception");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("enc-gcn-cora") != std::string::npos);
    }
    const std::string dump = dump_preset(find_preset("enc-gat-citeseer"));
    CHECK(dump.find("LR_GNN\tLR_oc\tWD_GNN\tWD_oc\tc\tp\talpha\tbeta\tgamma\n") != std::string::npos);
    CHECK(dump.find("0.01\t0.01\t1e-3\t1e-4\t256\t0.7\t1.0\t2.0\t2.0\n") != std::string::npos);
    CHECK(dump.find("backbone=gat\n") != std::string::npos);
  }
}
