#include <atomic>
#include <chrono>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "doctest.h"
#include "json.hpp"
#include "rotograb/errors.hpp"
#include "rotograb/protocol.hpp"
#include "rotograb/server.hpp"
#include "support/hand_frames.hpp"

using namespace rotograb;
using namespace rotograb::service;
using nlohmann::json;
namespace net = boost::asio;
namespace beast = boost::beast;
using tcp = net::ip::tcp;

namespace {

Trajectory slow_trajectory(std::size_t count, double rate) {
    Trajectory t;
    for (std::size_t i = 0; i < count; ++i) {
        JointAngles a = JointState::calibration().angles();
        a[dof_index(Finger::Middle, 2)] = deg_to_rad(static_cast<double>(i % 90));
        t.samples.push_back({static_cast<double>(i) / rate, a});
    }
    return t;
}

void wait_for(const std::function<bool()>& done, std::chrono::milliseconds limit = std::chrono::seconds(5)) {
    const auto end = std::chrono::steady_clock::now() + limit;
    while (!done() && std::chrono::steady_clock::now() < end) std::this_thread::sleep_for(std::chrono::milliseconds(5));
}

bool limit_valid(const Snapshot& s, const HandGeometry& g) {
    return !first_limit_violation(s.state.angles(), g).has_value();
}

class TcpClient {
public:
    explicit TcpClient(std::uint16_t port) : socket_(ioc_) {
        socket_.connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
    }

    void send_raw(const std::string& line) { net::write(socket_, net::buffer(line + "\n")); }

    json next() {
        const std::size_t n = net::read_until(socket_, net::dynamic_buffer(buffer_), '\n');
        json j = json::parse(buffer_.substr(0, n - 1));
        buffer_.erase(0, n);
        return j;
    }

    // Sends and returns the reply carrying the same id, skipping broadcasts.
    json request(json msg, const std::string& id) {
        msg["id"] = id;
        send_raw(msg.dump());
        for (;;) {
            json j = next();
            if (j.contains("id") && j["id"] == id) return j;
        }
    }

private:
    net::io_context ioc_;
    tcp::socket socket_;
    std::string buffer_;
};

class WsClient {
public:
    explicit WsClient(std::uint16_t port) : ws_(ioc_) {
        beast::get_lowest_layer(ws_).connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
        ws_.handshake("127.0.0.1", "/");
    }

    json next() {
        beast::flat_buffer buf;
        ws_.read(buf);
        return json::parse(beast::buffers_to_string(buf.data()));
    }

    json request(json msg, const std::string& id) {
        msg["id"] = id;
        ws_.write(net::buffer(msg.dump()));
        for (;;) {
            json j = next();
            if (j.contains("id") && j["id"] == id) return j;
        }
    }

    void close() { ws_.close(beast::websocket::close_code::normal); }

private:
    net::io_context ioc_;
    beast::websocket::stream<beast::tcp_stream> ws_;
};

json cmd(std::initializer_list<std::pair<const char*, double>> joints) {
    json j = {{"v", 1}, {"type", "cmd"}, {"joints", json::object()}};
    for (const auto& [k, v] : joints) j["joints"][k] = v;
    return j;
}

}  // namespace

TEST_CASE("manual command shows up in the next snapshot") {
    const HandGeometry g;
    HandService svc(g, std::make_shared<MockServoBus>());
    const auto before = svc.snapshot();
    CHECK(before->source == Source::Idle);
    const Status s = svc.set_joints("a", {{dof_index(Finger::Index, 1), deg_to_rad(10.0)}});
    REQUIRE(s.ok());
    const auto after = svc.snapshot();
    CHECK(after->seq > before->seq);
    CHECK(after->state.theta1(Finger::Index) == deg_to_rad(10.0));
    CHECK(after->source == Source::Manual);
    CHECK(after->owner == "a");
}

TEST_CASE("snapshot derived data comes from its own state") {
    const HandGeometry g;
    HandService svc(g, std::make_shared<MockServoBus>());
    svc.set_joints("a", {{dof_index(Finger::Thumb, 2), 0.7}, {kPlateDof, 0.4}});
    const auto s = svc.snapshot();
    for (Finger f : kAllFingers) {
        const auto fk = kinematics::finger_fk(g, f, s->state.theta1(f), s->state.theta2(f), s->state.plate());
        CHECK(s->fk[index_of(f)].tip() == fk.tip());
        CHECK(s->tendons[index_of(f)].joint2.extensor ==
              kinematics::finger_tendon_deltas(g, s->state.theta1(f), s->state.theta2(f)).joint2.extensor);
    }
    CHECK(s->motors[kPlateMotor].rotation == joint_to_motor(s->state, g)[kPlateMotor].rotation);

    svc.reset("a");
    const auto r = svc.snapshot();
    for (const auto& t : r->tendons) {
        CHECK(t.joint1.extensor == 0.0);
        CHECK(t.joint2.extensor == 0.0);
    }
    CHECK(r->plate.right == 0.0);
}

TEST_CASE("out-of-limit manual targets are rejected and the state is kept") {
    const HandGeometry g;
    HandService svc(g, std::make_shared<MockServoBus>());
    const auto before = svc.snapshot();
    const Status s = svc.set_joints("a", {{dof_index(Finger::Ring, 2), deg_to_rad(120.0)}});
    CHECK(s.code == Status::Code::Limit);
    CHECK(svc.snapshot()->seq == before->seq);
    CHECK(svc.snapshot()->source == Source::Idle);
}

TEST_CASE("mode switch moves the plate to the preset") {
    const HandGeometry g;
    HandService svc(g, std::make_shared<MockServoBus>());
    for (auto [mode, deg] : {std::pair{PlateMode::Left, -65.0}, {PlateMode::Middle, 0.0}, {PlateMode::Right, 65.0}}) {
        REQUIRE(svc.set_mode("ui", mode).ok());
        CHECK(svc.snapshot()->state.plate() == deg_to_rad(deg));
        CHECK(svc.snapshot()->mode == mode);
    }
}

TEST_CASE("second writer is rejected while teleop runs; teleop continues") {
    const HandGeometry g;
    auto bus = std::make_shared<MockServoBus>();
    HandService svc(g, bus);
    testing::HandPose pose;
    pose.proximal.fill(0.5);
    REQUIRE(svc.landmarks("glove", testing::make_frame(pose)).ok());
    CHECK(svc.snapshot()->source == Source::Teleop);

    const Status busy = svc.play("other", slow_trajectory(10, 50.0));
    CHECK(busy.code == Status::Code::Busy);
    CHECK(svc.set_joints("other", {{0, 0.1}}).code == Status::Code::Busy);
    CHECK(svc.stop("other").code == Status::Code::Busy);
    CHECK(svc.snapshot()->source == Source::Teleop);

    pose.t = 0.1;
    const auto seq = svc.snapshot()->seq;
    REQUIRE(svc.landmarks("glove", testing::make_frame(pose)).ok());
    CHECK(svc.snapshot()->seq > seq);

    svc.disconnect("glove");
    CHECK(svc.snapshot()->source == Source::Idle);
    CHECK_FALSE(bus->busy());
    CHECK(svc.set_joints("other", {{0, 0.1}}).ok());
}

TEST_CASE("source changes always pass through Idle") {
    const HandGeometry g;
    HandService svc(g, std::make_shared<MockServoBus>());
    svc.set_joints("a", {{0, 0.1}});
    svc.landmarks("a", testing::make_frame({}));
    svc.play("a", slow_trajectory(3, 200.0));
    wait_for([&] { return svc.snapshot()->source == Source::Idle; });
    svc.set_mode("b", PlateMode::Left);
    svc.release("b");

    const auto tr = svc.transitions();
    REQUIRE(tr.size() >= 8);
    for (const auto& [from, to] : tr) CHECK((from == Source::Idle) != (to == Source::Idle));
    CHECK(tr.back().second == Source::Idle);
}

TEST_CASE("playback runs to completion and returns to Idle") {
    const HandGeometry g;
    auto bus = std::make_shared<MockServoBus>();
    HandService svc(g, bus);
    REQUIRE(svc.play("p", slow_trajectory(20, 200.0)).ok());
    CHECK(svc.snapshot()->source == Source::Playback);
    wait_for([&] { return svc.snapshot()->source == Source::Idle; });
    CHECK(svc.snapshot()->source == Source::Idle);
    CHECK(bus->command_count() == 20 * kMotorCount);
    CHECK(svc.snapshot()->state.theta2(Finger::Middle) == doctest::Approx(deg_to_rad(19.0)));
}

TEST_CASE("playback can be stopped by its owner") {
    const HandGeometry g;
    HandService svc(g, std::make_shared<MockServoBus>());
    REQUIRE(svc.play("p", slow_trajectory(1000, 50.0)).ok());
    CHECK(svc.stop("q").code == Status::Code::Busy);
    CHECK(svc.stop("p").ok());
    CHECK(svc.snapshot()->source == Source::Idle);

    Trajectory bad = slow_trajectory(5, 50.0);
    bad.samples[2].angles[0] = 3.0;
    CHECK(svc.play("p", bad).code == Status::Code::Limit);
}

TEST_CASE("concurrent readers see increasing, limit-valid snapshots") {
    const HandGeometry g;
    HandService svc(g, std::make_shared<MockServoBus>());
    std::atomic<bool> done{false};
    std::atomic<int> bad{0};
    std::atomic<long> reads{0};
    std::vector<std::thread> readers;
    for (int r = 0; r < 3; ++r)
        readers.emplace_back([&] {
            std::uint64_t last = 0;
            while (!done) {
                const auto s = svc.snapshot();
                if (s->seq < last || !limit_valid(*s, g)) ++bad;
                last = s->seq;
                ++reads;
            }
        });
    std::vector<std::uint64_t> seen;
    const int listener = svc.subscribe([&](const SnapshotPtr& s) { seen.push_back(s->seq); });
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 1000; ++i) svc.set_joints("writer", {{static_cast<std::size_t>(i % kDofCount), u(rng)}});
    done = true;
    for (auto& t : readers) t.join();
    svc.unsubscribe(listener);
    CHECK(bad == 0);
    CHECK(reads > 0);
    REQUIRE(seen.size() > 1);
    for (std::size_t i = 1; i < seen.size(); ++i) CHECK(seen[i] == seen[i - 1] + 1);
}

TEST_CASE("protocol decoding") {
    const HandGeometry g;
    HandService svc(g, std::make_shared<MockServoBus>());
    const auto reply = [&](const std::string& line) { return json::parse(protocol::handle_line(svc, "c", line)); };

    json r = reply(R"({"v":1,"type":"get","id":"g1"})");
    CHECK(r["type"] == "state");
    CHECK(r["id"] == "g1");
    CHECK(r["limits_deg"]["plate"][1] == 65.0);
    CHECK(r["fk_m"]["index"].size() == 5);

    r = reply(R"({"v":1,"type":"cmd","joints":{"index_j1":10},"future_field":true})");
    CHECK(r["type"] == "state");
    CHECK(r["joints_deg"]["index_j1"].get<double>() == doctest::Approx(10.0));
    CHECK(r["source"] == "manual");

    CHECK(reply("{oops")["code"] == "bad_request");
    CHECK(reply("[1,2]")["code"] == "bad_request");
    CHECK(reply(R"({"type":"get"})")["code"] == "version");
    CHECK(reply(R"({"v":2,"type":"get"})")["code"] == "version");
    CHECK(reply(R"({"v":1,"type":"dance"})")["code"] == "bad_request");
    CHECK(reply(R"({"v":1,"type":"cmd","joints":{"toe_j1":1}})")["code"] == "bad_request");
    CHECK(reply(R"({"v":1,"type":"cmd","joints":{"index_j2":150}})")["code"] == "limit");
    CHECK(reply(R"({"v":1,"type":"mode","mode":"Q"})")["code"] == "bad_request");
    CHECK(reply(R"({"v":1,"type":"mode","mode":"L"})")["mode"] == "L");
    CHECK(reply(R"({"v":1,"type":"play","file":"/nonexistent.csv"})")["code"] == "io");
    CHECK(reply(R"({"v":1,"type":"play","csv":"t,x\n"})")["code"] == "bad_request");
    CHECK(reply(R"({"v":1,"type":"landmarks","t":0})")["code"] == "bad_request");
    CHECK(reply(R"({"v":1,"type":"release"})")["source"] == "idle");
    CHECK(json::parse(protocol::handle_line(svc, "d", R"({"v":1,"type":"reset"})"))["owner"] == "d");
    CHECK(json::parse(protocol::handle_line(svc, "c", R"({"v":1,"type":"reset"})"))["code"] == "busy");
}

TEST_CASE("TCP and WebSocket transports") {
    const HandGeometry g;
    HandService svc(g, std::make_shared<MockServoBus>());
    server::ServerOptions opts;
    opts.ws_port = 0;
    opts.tcp_port = 0;
    server::Server srv(svc, opts);
    srv.start();
    REQUIRE(srv.ws_port() != 0);
    REQUIRE(srv.tcp_port() != 0);

    TcpClient producer(srv.tcp_port());
    WsClient cockpit(srv.ws_port());

    // Unsolicited state arrives on connect and at the tick.
    CHECK(producer.next()["type"] == "state");
    CHECK(cockpit.next()["v"] == 1);

    json r = cockpit.request(cmd({{"index_j1", 10.0}}), "1");
    CHECK(r["type"] == "state");
    CHECK(r["joints_deg"]["index_j1"].get<double>() == doctest::Approx(10.0));
    const auto seq = r["seq"].get<std::uint64_t>();

    // The other client is a second writer.
    r = producer.request(cmd({{"ring_j1", 5.0}}), "2");
    CHECK(r["type"] == "err");
    CHECK(r["code"] == "busy");

    // Malformed input gets an error and the connection stays usable.
    producer.send_raw("this is not json");
    json err = producer.next();
    while (err["type"] != "err") err = producer.next();
    CHECK(err["code"] == "bad_request");
    r = producer.request({{"v", 1}, {"type", "get"}}, "3");
    CHECK(r["seq"].get<std::uint64_t>() >= seq);
    CHECK(r["owner"] == cockpit.request({{"v", 1}, {"type", "get"}}, "4")["owner"]);

    // Dropping the cockpit connection frees the bus.
    cockpit.close();
    wait_for([&] { return svc.snapshot()->source == Source::Idle; });
    r = producer.request(cmd({{"ring_j1", 5.0}}), "5");
    CHECK(r["type"] == "state");
    CHECK(r["source"] == "manual");

    srv.stop();
}

TEST_CASE("bind failure is reported") {
    const HandGeometry g;
    HandService svc(g, std::make_shared<MockServoBus>());
    server::ServerOptions opts;
    opts.ws_port = 0;
    opts.tcp_port = 0;
    server::Server first(svc, opts);
    first.start();
    server::ServerOptions clash;
    clash.ws_port = first.ws_port();
    clash.tcp_port = 0;
    server::Server second(svc, clash);
    CHECK_THROWS_AS(second.start(), rotograb::Error);
    clash.bind = "not-an-address";
    server::Server third(svc, clash);
    CHECK_THROWS_AS(third.start(), rotograb::Error);
}

TEST_CASE("environment overrides") {
    server::ServerOptions opts;
    setenv("ROTOGRAB_PORT", "9100", 1);
    server::apply_environment(opts);
    CHECK(opts.ws_port == 9100);
    CHECK(opts.tcp_port == 9101);
    setenv("ROTOGRAB_PORT", "nope", 1);
    CHECK_THROWS_AS(server::apply_environment(opts), std::invalid_argument);
    unsetenv("ROTOGRAB_PORT");
    setenv("ROTOGRAB_LOG_LEVEL", "warn", 1);
    CHECK_NOTHROW(server::apply_environment(opts));
    setenv("ROTOGRAB_LOG_LEVEL", "shouting", 1);
    CHECK_THROWS_AS(server::apply_environment(opts), std::invalid_argument);
    unsetenv("ROTOGRAB_LOG_LEVEL");
}
