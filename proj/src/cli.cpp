#include "tlt/cli.hpp"

#include <csignal>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>

#include "CLI11.hpp"
#include "tlt/exchange.hpp"
#include "tlt/store_server.hpp"
#include "tlt/threats.hpp"

namespace tlt::cli {

namespace {

namespace fs = std::filesystem;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, ByteView data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

Document read_doc(const fs::path& path) { return decode(read_file(path)); }
void write_doc(const fs::path& path, const Document& doc) { write_file(path, encode_canonical(doc)); }

fs::path with_extension(fs::path p, const char* ext) { return p.replace_extension(ext); }

struct Options {
  std::string store_path;
  std::optional<std::uint64_t> seed;
  bool trace_frames = false;
  bool auto_accept = false;

  std::string key, authority_key, cert, info, out, root_out, image, meta, dinf, device, device_key, fw, instinfo,
      payload, payload_file, frame, socket, root, verdict, challenge;
  std::vector<std::string> challenge_frames;
  std::uint64_t seq = 0;
  bool no_register = false;
  std::string threat;
};

class Context {
 public:
  Context(Options& opts, std::istream& in, std::ostream& out, std::ostream& err)
      : o(opts), in(in), out(out), err(err) {}

  RandomSource& rng() {
    if (!o.seed) return system_random();
    if (!seeded_) seeded_ = std::make_unique<SeededRandom>(*o.seed);
    return *seeded_;
  }

  const std::string& store_path() const {
    if (o.store_path.empty()) throw Error(ErrorCode::UsageError, "--store or TLT_STORE is required");
    return o.store_path;
  }

  Options& o;
  std::istream& in;
  std::ostream& out;
  std::ostream& err;

 private:
  std::unique_ptr<SeededRandom> seeded_;
};

void cmd_authority_init(Context& ctx) {
  KeyPair kp = generate_keypair(ctx.rng());
  RootCertificate root = RootCertificate::create(ctx.o.info.empty() ? "TLT Authority" : ctx.o.info, kp);
  Store::create(ctx.store_path(), root);
  write_secret_key_file(ctx.o.key, kp.secret_key);
  write_public_key_file(with_extension(ctx.o.key, ".tltpub"), kp.public_key);
  write_doc(ctx.o.root_out, root.document());
  ctx.out << "root " << to_hex(document_digest(root.document())) << "\n";
  ctx.out << "authority-key " << to_hex(kp.public_key.bytes) << "\n";
}

void cmd_mfr_register(Context& ctx) {
  Store store = Store::open(ctx.store_path());
  SecretKey authority_sk = read_secret_key_file(ctx.o.authority_key);
  if (public_key_of(authority_sk) != store.root().authority_key()) {
    throw Error(ErrorCode::InvalidKey, "authority key does not match the store's root");
  }
  KeyPair kp = generate_keypair(ctx.rng());
  ManufacturerCertificate mcrt =
      make_manufacturer_certificate(ctx.o.info.empty() ? "manufacturer" : ctx.o.info, kp.public_key, authority_sk,
                                    ctx.rng());
  std::uint64_t seq = store.register_document(RecordKind::Manufacturer, mcrt.document());
  write_secret_key_file(ctx.o.key, kp.secret_key);
  write_public_key_file(with_extension(ctx.o.key, ".tltpub"), kp.public_key);
  write_doc(ctx.o.out, mcrt.document());
  ctx.out << "manufacturer " << to_hex(mcrt.mfr_id()) << " seq=" << seq << "\n";
}

void cmd_mfr_sign_fw(Context& ctx) {
  Store store = Store::open(ctx.store_path());
  SecretKey mfr_sk = read_secret_key_file(ctx.o.key);
  ManufacturerCertificate mcrt(read_doc(ctx.o.cert));
  FirmwareDocument fw = sign_firmware(read_file(ctx.o.image), ctx.o.meta, mfr_sk, mcrt);
  const Document chain[] = {mcrt.document()};
  std::uint64_t seq = store.register_document(RecordKind::Firmware, fw.document(), chain);
  write_doc(ctx.o.out, fw.document());
  ctx.out << "firmware " << to_hex(document_digest(fw.document())) << " seq=" << seq << "\n";
}

fs::path device_key_path(const Options& o) {
  return o.device_key.empty() ? with_extension(o.out, ".tltkey") : fs::path(o.device_key);
}

void cmd_device_birth(Context& ctx) {
  Store store = Store::open(ctx.store_path());
  SecretKey mfr_sk = read_secret_key_file(ctx.o.key);
  ManufacturerCertificate mcrt(read_doc(ctx.o.cert));
  auto [dev, dcrt] = Device::birth(mcrt, mfr_sk, store.root(), ctx.o.dinf, ctx.rng());
  const Document chain[] = {mcrt.document()};
  std::uint64_t seq = store.register_document(RecordKind::Device, dcrt.document(), chain);
  dev.save(ctx.o.out, device_key_path(ctx.o));
  ctx.out << "device " << to_hex(dev.uuid()) << " seq=" << seq << "\n";
}

void cmd_device_install(Context& ctx) {
  Device dev = Device::load(ctx.o.device);
  FirmwareDocument fw(read_doc(ctx.o.fw));
  const Document chain[] = {read_doc(ctx.o.cert)};
  InstallationDocument inst = dev.install_firmware(fw, read_file(ctx.o.image), chain, ctx.o.instinfo);
  if (!ctx.o.no_register) {
    Store store = Store::open(ctx.store_path());
    std::uint64_t seq = store.register_document(RecordKind::Installation, inst.document());
    ctx.out << "registered seq=" << seq << "\n";
  }
  dev.save(ctx.o.device, fs::path(ctx.o.device).parent_path() / Device::key_reference(read_file(ctx.o.device)));
  ctx.out << "installed state=" << to_hex(dev.compute_state_digest()) << "\n";
}

void cmd_device_configure(Context& ctx) {
  Device dev = Device::load(ctx.o.device);
  Bytes payload = ctx.o.payload_file.empty() ? Bytes(ctx.o.payload.begin(), ctx.o.payload.end())
                                              : read_file(ctx.o.payload_file);
  ConfigurationDocument cfg = dev.apply_configuration(payload, ctx.o.seq);
  if (!ctx.o.no_register) {
    Store store = Store::open(ctx.store_path());
    std::uint64_t seq = store.register_document(RecordKind::Configuration, cfg.document());
    ctx.out << "registered seq=" << seq << "\n";
  }
  dev.save(ctx.o.device, fs::path(ctx.o.device).parent_path() / Device::key_reference(read_file(ctx.o.device)));
  ctx.out << "configured seq=" << cfg.seq() << " state=" << to_hex(dev.compute_state_digest()) << "\n";
}

void cmd_device_advertise(Context& ctx) {
  Device dev = Device::load(ctx.o.device);
  Bytes frame = dev.advertise();
  if (ctx.o.trace_frames) transport::trace_frame(ctx.err, "adv", frame);
  ctx.out << to_hex(frame) << "\n";
}

void cmd_device_respond(Context& ctx) {
  Device dev = Device::load(ctx.o.device);
  std::vector<transport::DataFrame> frames;
  for (const auto& hex : ctx.o.challenge_frames) {
    Bytes raw = from_hex_or_throw(hex);
    if (ctx.o.trace_frames) transport::trace_frame(ctx.err, "v->d", raw);
    frames.push_back(transport::DataFrame::decode(raw));
  }
  transport::Message msg = transport::reassemble(frames);
  if (msg.msg_type != transport::MsgType::Challenge || msg.payload.size() != kNonceSize) {
    throw Error(ErrorCode::ParseError, "not a challenge message");
  }
  AttestationResponse resp = dev.handle_challenge(Nonce::from(msg.payload), ctx.rng());
  for (const auto& f : transport::fragment(transport::MsgType::Response, resp.encode())) {
    Bytes raw = f.encode();
    if (ctx.o.trace_frames) transport::trace_frame(ctx.err, "d->v", raw);
    ctx.out << to_hex(raw) << "\n";
  }
}

void cmd_store_serve(Context& ctx) {
  if (ctx.o.socket.empty()) throw Error(ErrorCode::UsageError, "--socket is required");
  Store store = Store::open(ctx.store_path());
  StoreServer server(store, ctx.o.socket);
  g_stop.store(false);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  ctx.out << "serving " << ctx.o.socket << " records=" << store.records().size() << std::endl;
  server.run(g_stop);
}

void cmd_store_dump(Context& ctx) {
  Store store = Store::load(ctx.store_path());
  for (const auto& r : store.records()) {
    ctx.out << r.seq << " " << record_kind_name(r.kind) << " " << to_hex(document_digest(r.doc));
    switch (r.kind) {
      case RecordKind::Root: ctx.out << " info=\"" << RootCertificate(r.doc).info() << "\""; break;
      case RecordKind::Manufacturer: {
        ManufacturerCertificate m(r.doc);
        ctx.out << " mfr_id=" << to_hex(m.mfr_id()) << " info=\"" << m.info() << "\"";
        break;
      }
      case RecordKind::Device: {
        DeviceCertificate d(r.doc);
        ctx.out << " uuid=" << to_hex(d.uuid()) << " info=\"" << d.info() << "\"";
        break;
      }
      case RecordKind::Firmware: ctx.out << " meta=\"" << FirmwareDocument(r.doc).meta() << "\""; break;
      case RecordKind::Installation: {
        InstallationDocument i(r.doc);
        ctx.out << " uuid=" << to_hex(i.uuid()) << " fw=" << to_hex(i.fw_doc_digest());
        break;
      }
      case RecordKind::Configuration: {
        ConfigurationDocument c(r.doc);
        ctx.out << " uuid=" << to_hex(c.uuid()) << " seq=" << c.seq();
        break;
      }
    }
    ctx.out << "\n";
  }
  for (const auto& e : store.state_index()) {
    bool current = store.current_state(e.uuid) == e.state_digest;
    ctx.out << "state " << to_hex(e.uuid) << " " << to_hex(e.state_digest) << " inst=" << e.inst_ref
            << " cfg=" << (e.cfg_ref ? std::to_string(*e.cfg_ref) : "-") << " current=" << (current ? 1 : 0) << "\n";
  }
}

// Local store or socket client, plus the trusted root.
struct QueryBackend {
  std::optional<Store> local;
  std::unique_ptr<RemoteStore> remote;
  std::optional<RootCertificate> root;

  const StoreQuery& query() const {
    if (remote) return *remote;
    return *local;
  }
};

QueryBackend open_backend(Context& ctx) {
  QueryBackend b;
  if (!ctx.o.socket.empty()) {
    if (ctx.o.root.empty()) throw Error(ErrorCode::UsageError, "--root is required with --socket");
    b.remote = std::make_unique<RemoteStore>(ctx.o.socket);
  } else {
    b.local.emplace(Store::load(ctx.store_path()));
  }
  if (!ctx.o.root.empty()) {
    b.root.emplace(read_doc(ctx.o.root));
    if (!b.root->self_verifies()) throw Error(ErrorCode::ChainInvalid, "trusted root does not self-verify");
  } else {
    b.root.emplace(b.local->root());
  }
  return b;
}

void cmd_verify_scan(Context& ctx) {
  Uuid uuid = transport::parse_advertisement(from_hex_or_throw(ctx.o.frame));
  ctx.out << "uuid " << to_hex(uuid) << "\n";
  if (ctx.o.socket.empty() && ctx.o.store_path.empty()) return;
  QueryBackend b = open_backend(ctx);
  try {
    DeviceView view = b.query().lookup_device(uuid);
    const Document chain[] = {view.certificate.document(), view.manufacturer.document()};
    bool chained = static_cast<bool>(verify_chain(chain, *b.root));
    ctx.out << "model=\"" << view.model() << "\" manufacturer=\"" << view.manufacturer_name()
            << "\" chain=" << (chained ? "ok" : "invalid") << "\n";
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotFound) throw;
    ctx.out << "unknown device\n";
  }
}

bool prompt_user(Context& ctx, const TrustVerdict& v) {
  ctx.err << "accept device " << to_hex(v.uuid) << " (" << state_check_name(v.state_check) << ")? [y/N] ";
  std::string answer;
  std::getline(ctx.in, answer);
  return answer == "y" || answer == "Y" || answer == "yes";
}

void cmd_verify_challenge(Context& ctx) {
  QueryBackend b = open_backend(ctx);
  Device dev = Device::load(ctx.o.device);
  Verifier verifier(b.query(), *b.root, ctx.rng());
  transport::Channel channel;
  if (ctx.o.trace_frames) channel.set_trace(&ctx.err);
  TrustVerdict v = run_attestation(dev, verifier, channel, ctx.rng());
  ctx.out << format_verdict(v) << "\n";
  if (v.identity) {
    ctx.out << "identity model=\"" << v.identity->model() << "\" manufacturer=\"" << v.identity->manufacturer_name()
            << "\"\n";
  }
  bool accepted = trust_decision(v, ctx.o.auto_accept, [&](const TrustVerdict& tv) { return prompt_user(ctx, tv); });
  ctx.out << "accepted=" << (accepted ? 1 : 0) << "\n";
}

int cmd_verify_decide(Context& ctx) {
  std::string line = ctx.o.verdict;
  if (line.empty()) std::getline(ctx.in, line);
  TrustVerdict v = parse_verdict(line);
  bool accepted = trust_decision(v, ctx.o.auto_accept, [&](const TrustVerdict& tv) { return prompt_user(ctx, tv); });
  ctx.out << "accepted=" << (accepted ? 1 : 0) << "\n";
  return accepted ? kExitOk : kExitFailure;
}

int cmd_threats_run(Context& ctx) {
  std::vector<threats::ThreatId> ids;
  if (ctx.o.threat.empty()) {
    ids = threats::all_scenarios();
  } else {
    auto id = threats::threat_from_name(ctx.o.threat);
    if (!id) throw Error(ErrorCode::UsageError, "unknown scenario " + ctx.o.threat);
    ids.push_back(*id);
  }
  std::size_t passed = 0;
  for (auto id : ids) {
    auto report = threats::run_scenario(id, ctx.o.seed);
    ctx.out << threats::format_report(report);
    if (report.passed) ++passed;
  }
  ctx.out << "threats: " << passed << "/" << ids.size() << " passed\n";
  return passed == ids.size() ? kExitOk : kExitFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"TLT: device identity and integrity checks before interaction", "tlt"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--store", o.store_path, "Store log (.tltlog)")->envname("TLT_STORE");
  app.add_option("--seed", o.seed, "Deterministic randomness seed");
  app.add_flag("--trace-frames", o.trace_frames, "Hex-dump radio frames to stderr");
  app.add_flag("--auto-accept", o.auto_accept, "Accept automatically when the gate is open");

  auto* authority = app.add_subcommand("authority", "Root of trust")->require_subcommand(1);
  auto* a_init = authority->add_subcommand("init", "Create the root certificate and an empty store");
  a_init->add_option("--key", o.key, "Authority secret key out (.tltkey)")->required();
  a_init->add_option("--root-out", o.root_out, "Root certificate out (.tltdoc)")->default_val("root.tltdoc");
  a_init->add_option("--info", o.info, "Authority identifying text");

  auto* mfr = app.add_subcommand("mfr", "Manufacturer")->require_subcommand(1);
  auto* m_reg = mfr->add_subcommand("register", "Create and register a manufacturer certificate");
  m_reg->add_option("--authority-key", o.authority_key, "Authority secret key")->required();
  m_reg->add_option("--key", o.key, "Manufacturer secret key out")->required();
  m_reg->add_option("--out", o.out, "Manufacturer certificate out")->required();
  m_reg->add_option("--info", o.info, "Manufacturer name");
  auto* m_fw = mfr->add_subcommand("sign-fw", "Sign and register a firmware image");
  m_fw->add_option("--key", o.key, "Manufacturer secret key")->required();
  m_fw->add_option("--cert", o.cert, "Manufacturer certificate")->required();
  m_fw->add_option("--image", o.image, "Firmware image")->required();
  m_fw->add_option("--meta", o.meta, "Version/model text")->required();
  m_fw->add_option("--out", o.out, "Firmware document out")->required();

  auto* device = app.add_subcommand("device", "Simulated device")->require_subcommand(1);
  auto* d_birth = device->add_subcommand("birth", "Provision a device and register its certificate");
  d_birth->add_option("--key", o.key, "Manufacturer secret key")->required();
  d_birth->add_option("--cert", o.cert, "Manufacturer certificate")->required();
  d_birth->add_option("--dinf", o.dinf, "Device info text")->required();
  d_birth->add_option("--out", o.out, "Device state out (.tltdev)")->required();
  d_birth->add_option("--device-key", o.device_key, "Device secret key out (default: <out>.tltkey)");
  auto* d_install = device->add_subcommand("install", "Install signed firmware");
  d_install->add_option("--device", o.device, "Device state")->required();
  d_install->add_option("--fw", o.fw, "Firmware document")->required();
  d_install->add_option("--image", o.image, "Firmware image")->required();
  d_install->add_option("--cert", o.cert, "Manufacturer certificate")->required();
  d_install->add_option("--instinfo", o.instinfo, "Installation detail")->default_val("slot=0");
  d_install->add_flag("--no-register", o.no_register, "Do not submit the proof to the store");
  auto* d_cfg = device->add_subcommand("configure", "Apply a configuration");
  d_cfg->add_option("--device", o.device, "Device state")->required();
  auto* payload_opt = d_cfg->add_option("--payload", o.payload, "Configuration text");
  d_cfg->add_option("--payload-file", o.payload_file, "Configuration file")->excludes(payload_opt);
  d_cfg->add_option("--seq", o.seq, "Configuration sequence number")->required();
  d_cfg->add_flag("--no-register", o.no_register, "Do not submit the proof to the store");
  auto* d_adv = device->add_subcommand("advertise", "Print the advertising frame");
  d_adv->add_option("--device", o.device, "Device state")->required();
  auto* d_resp = device->add_subcommand("respond", "Answer challenge frames");
  d_resp->add_option("--device", o.device, "Device state")->required();
  d_resp->add_option("--challenge", o.challenge_frames, "Challenge data frame(s), hex")->required();

  auto* store = app.add_subcommand("store", "Trust store")->require_subcommand(1);
  auto* s_serve = store->add_subcommand("serve", "Serve the line protocol on a Unix socket");
  s_serve->add_option("--socket", o.socket, "Socket path")->required();
  store->add_subcommand("dump", "Print records and the state index");

  auto* verify = app.add_subcommand("verify", "User-side verifier")->require_subcommand(1);
  auto* v_scan = verify->add_subcommand("scan", "Parse an advertisement and look the device up");
  v_scan->add_option("--frame", o.frame, "Advertising frame, hex")->required();
  v_scan->add_option("--socket", o.socket, "Store socket");
  v_scan->add_option("--root", o.root, "Trusted root certificate");
  auto* v_ch = verify->add_subcommand("challenge", "Challenge a device over the simulated radio");
  v_ch->add_option("--device", o.device, "Device state")->required();
  v_ch->add_option("--socket", o.socket, "Store socket");
  v_ch->add_option("--root", o.root, "Trusted root certificate");
  auto* v_decide = verify->add_subcommand("decide", "Apply the trust decision to a verdict line");
  v_decide->add_option("--verdict", o.verdict, "VERDICT line (default: read stdin)");

  auto* threats_cmd = app.add_subcommand("threats", "Threat scenarios")->require_subcommand(1);
  auto* t_run = threats_cmd->add_subcommand("run", "Run all scenarios or one (TA01..TA06, CONTROL)");
  t_run->add_option("scenario", o.threat, "Scenario id");

  std::vector<std::string> argv_storage{"tlt"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: UsageError: " << e.what() << "\n";
    return kExitUsage;
  }

  Context ctx(o, in, out, err);
  try {
    if (a_init->parsed()) cmd_authority_init(ctx);
    else if (m_reg->parsed()) cmd_mfr_register(ctx);
    else if (m_fw->parsed()) cmd_mfr_sign_fw(ctx);
    else if (d_birth->parsed()) cmd_device_birth(ctx);
    else if (d_install->parsed()) cmd_device_install(ctx);
    else if (d_cfg->parsed()) cmd_device_configure(ctx);
    else if (d_adv->parsed()) cmd_device_advertise(ctx);
    else if (d_resp->parsed()) cmd_device_respond(ctx);
    else if (s_serve->parsed()) cmd_store_serve(ctx);
    else if (store->got_subcommand("dump")) cmd_store_dump(ctx);
    else if (v_scan->parsed()) cmd_verify_scan(ctx);
    else if (v_ch->parsed()) cmd_verify_challenge(ctx);
    else if (v_decide->parsed()) return cmd_verify_decide(ctx);
    else if (t_run->parsed()) return cmd_threats_run(ctx);
    else throw Error(ErrorCode::UsageError, "no command");
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::UsageError ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace tlt::cli
