#include <thread>

#include "support.hpp"
#include "tlt/store_server.hpp"

namespace tlt {
namespace {

using test::World;

TEST(Protocol, HandlerResponses) {
  World w;
  Device dev = w.configured_device();
  std::string r = handle_store_request(w.store, "DEV " + to_hex(dev.uuid()));
  ASSERT_EQ(r.rfind("OK ", 0), 0u) << r;
  DeviceView v = decode_device_view(from_hex_or_throw(r.substr(3, r.size() - 4)));
  EXPECT_EQ(v.certificate.uuid(), dev.uuid());
  EXPECT_EQ(v.manufacturer.document(), w.mcrt.document());

  r = handle_store_request(w.store, "STATE " + to_hex(dev.uuid()) + " " + to_hex(dev.compute_state_digest()));
  ASSERT_EQ(r.rfind("OK ", 0), 0u) << r;
  StateView s = decode_state_view(from_hex_or_throw(r.substr(3, r.size() - 4)));
  EXPECT_TRUE(s.expected_current);
  EXPECT_EQ(s.config_seq, 1u);
  EXPECT_EQ(s.firmware.document(), w.fw.document());

  EXPECT_EQ(handle_store_request(w.store, "DEV " + to_hex(generate_uuid())), "ERR NotFound\n");
  EXPECT_EQ(handle_store_request(w.store, "DEV zz"), "ERR ParseError\n");
  EXPECT_EQ(handle_store_request(w.store, "DEV " + to_hex(dev.uuid()) + "00"), "ERR ParseError\n");
  EXPECT_EQ(handle_store_request(w.store, "HELLO"), "ERR UsageError\n");
  EXPECT_EQ(handle_store_request(w.store, ""), "ERR UsageError\n");
}

TEST(Protocol, ViewCodecsRejectGarbage) {
  World w;
  Device dev = w.born_device();
  Bytes enc = encode_device_view(w.store.lookup_device(dev.uuid()));
  EXPECT_ANY_THROW(decode_device_view(ByteView(enc).first(3)));
  EXPECT_ANY_THROW(decode_device_view(ByteView(enc).first(enc.size() - 1)));
  EXPECT_ANY_THROW(decode_state_view(Bytes{1, 0, 0}));
}

TEST(Server, RemoteLookupsMatchLocal) {
  World w;
  Device dev = w.configured_device();
  test::TempDir dir;
  auto sock = dir / "s.sock";
  StoreServer server(w.store, sock);
  std::atomic<bool> stop{false};
  std::thread t([&] { server.run(stop); });

  {
    RemoteStore remote(sock);
    DeviceView v = remote.lookup_device(dev.uuid());
    EXPECT_EQ(v.certificate.document(), w.store.lookup_device(dev.uuid()).certificate.document());
    StateView s = remote.lookup_state(dev.uuid(), dev.compute_state_digest());
    EXPECT_TRUE(s.expected_current);
    EXPECT_EQ(test::code_of([&] { remote.lookup_device(generate_uuid()); }), ErrorCode::NotFound);
    EXPECT_EQ(remote.request("BOGUS"), "ERR UsageError");

    // Verification through the socket gives the same verdict.
    Verifier verifier(remote, w.root, w.rng);
    transport::Channel ch;
    TrustVerdict verdict = run_attestation(dev, verifier, ch, w.rng);
    EXPECT_EQ(verdict.state_check, StateCheck::VerifiedCurrent);
    EXPECT_TRUE(verdict.gate);

    // Many clients at once.
    std::vector<std::thread> clients;
    std::atomic<int> good{0};
    for (int i = 0; i < 8; ++i) {
      clients.emplace_back([&] {
        RemoteStore r(sock);
        for (int k = 0; k < 20; ++k) {
          if (r.lookup_device(dev.uuid()).certificate.uuid() == dev.uuid()) ++good;
        }
      });
    }
    for (auto& c : clients) c.join();
    EXPECT_EQ(good.load(), 160);
  }

  stop = true;
  t.join();
}

TEST(Server, OversizedLineRejected) {
  World w;
  test::TempDir dir;
  auto sock = dir / "s.sock";
  StoreServer server(w.store, sock);
  std::atomic<bool> stop{false};
  std::thread t([&] { server.run(stop); });
  {
    RemoteStore remote(sock);
    std::string huge(kMaxRequestLine + 10, 'A');
    EXPECT_EQ(remote.request(huge).rfind("ERR", 0), 0u);
  }
  stop = true;
  t.join();
}

TEST(Server, PicksUpRecordsFromOtherWriters) {
  World w;
  test::TempDir dir;
  auto log = dir / "s.tltlog";
  Store writer = Store::create(log, w.root);
  writer.register_document(RecordKind::Manufacturer, w.mcrt.document());
  Store served = Store::open(log);
  auto sock = dir / "s.sock";
  StoreServer server(served, sock);
  std::atomic<bool> stop{false};
  std::thread t([&] { server.run(stop); });
  auto [dev, dcrt] = Device::birth(w.mcrt, w.mfr_keys.secret_key, w.root, "late", w.rng);
  {
    RemoteStore remote(sock);
    EXPECT_EQ(test::code_of([&] { remote.lookup_device(dev.uuid()); }), ErrorCode::NotFound);
    writer.register_document(RecordKind::Device, dcrt.document());
    EXPECT_EQ(remote.lookup_device(dev.uuid()).model(), "late");
  }
  stop = true;
  t.join();
}

TEST(Client, MissingSocket) {
  test::TempDir dir;
  EXPECT_EQ(test::code_of([&] { RemoteStore r(dir / "none.sock"); }), ErrorCode::IoError);
}

}  // namespace
}  // namespace tlt
