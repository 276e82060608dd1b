#include <atomic>
#include <cstdlib>
#include <map>
#include <mutex>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "greenzonal/catalog.hpp"
#include "greenzonal/file_io.hpp"
#include "test_support.hpp"

using namespace greenzonal;
namespace fs = std::filesystem;

namespace {

// Loopback product server. Paths under /secure/ need a bearer token.
class ProductServer {
public:
    explicit ProductServer(std::map<std::string, std::string> files) : files_(std::move(files)) {
        server_.Get(R"(/(secure/)?([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            ++requests_;
            {
                std::lock_guard lock(mu_);
                last_auth_ = req.get_header_value("Authorization");
            }
            if (req.matches[1].length() > 0 && req.get_header_value("Authorization") != "Bearer s3cret") {
                res.status = 401;
                return;
            }
            auto it = files_.find(req.matches[2]);
            if (it == files_.end()) {
                res.status = 404;
                return;
            }
            res.set_content(it->second, "application/octet-stream");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~ProductServer() {
        server_.stop();
        thread_.join();
    }
    std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + "/" + path; }
    int requests() const { return requests_; }
    std::string last_auth() {
        std::lock_guard lock(mu_);
        return last_auth_;
    }

private:
    std::map<std::string, std::string> files_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> requests_{0};
    std::mutex mu_;
    std::string last_auth_;
};

std::string line(const std::string& id, const std::string& url, const std::string& sha) {
    return id + ",MODIS,h19v04,2022-07-01," + url + "," + sha + "\n";
}

const std::string kHeader = "product_id,sensor,tile_id,acquisition_date,url,sha256\n";

// No token from the environment unless a test sets one.
struct EnvGuard {
    EnvGuard() { ::unsetenv(kTokenEnvVar); }
    ~EnvGuard() { ::unsetenv(kTokenEnvVar); }
};

} // namespace

TEST(Sha256, KnownVectors) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Manifest, ParsesAndValidates) {
    const std::string sha(64, 'A');
    const auto m = parse_manifest(kHeader + line("p1", "https://x/y/file.tif?sig=1", sha) +
                                  "p2,S2,T35TMK,2022-07-02,https://x/b.zip," + sha + ",sub/b.zip\n");
    ASSERT_EQ(m.entries.size(), 2u);
    EXPECT_EQ(m.entries[0].local_path, "p1.tif");
    EXPECT_EQ(m.entries[0].sha256, std::string(64, 'a'));
    EXPECT_EQ(m.entries[1].local_path, "sub/b.zip");
    EXPECT_THROW(parse_manifest(line("p", "u", "abc")), ParseError);
    EXPECT_THROW(parse_manifest(line("p", "u", sha) + line("p", "u", sha)), ParseError);
    EXPECT_THROW(parse_manifest("p,MODIS,u," + sha + "\n"), ParseError);
    EXPECT_THROW(parse_manifest("p,MODIS,t,d,u," + sha + ",../escape\n"), ParseError);
    EXPECT_THROW(parse_manifest(line("../p", "u", sha)), ParseError);
}

TEST(Fetch, DownloadsVerifiesAndCaches) {
    EnvGuard env;
    ProductServer server({{"a.tif", "alpha-bytes"}, {"b.tif", std::string(100000, 'b')}, {"c.tif", "tampered"}});
    gz_test::TempDir store;
    const auto manifest = parse_manifest(kHeader + line("a", server.url("a.tif"), sha256_hex("alpha-bytes")) +
                                         line("b", server.url("b.tif"), sha256_hex(std::string(100000, 'b'))) +
                                         line("c", server.url("c.tif"), sha256_hex("original")));
    const auto first = fetch(manifest, store.path());
    EXPECT_EQ(first.count(FetchStatus::fetched), 2u);
    ASSERT_EQ(first.count(FetchStatus::failed), 1u);
    EXPECT_EQ(first.entries[2].product_id, "c");
    EXPECT_NE(first.entries[2].reason.find("checksum mismatch"), std::string::npos);
    EXPECT_EQ(read_file_text(store / "a.tif"), "alpha-bytes");
    EXPECT_FALSE(fs::exists(store / "c.tif"));
    // no temp files left behind
    for (const auto& e : fs::directory_iterator(store.path()))
        EXPECT_EQ(e.path().filename().string().find(".part-"), std::string::npos) << e.path();

    const auto mtime = fs::last_write_time(store / "b.tif");
    const int before = server.requests();
    const auto second = fetch(manifest, store.path());
    EXPECT_EQ(second.count(FetchStatus::cached), 2u);
    EXPECT_EQ(second.count(FetchStatus::failed), 1u);
    EXPECT_EQ(server.requests(), before + 1); // only the mismatching entry is asked for again
    EXPECT_EQ(fs::last_write_time(store / "b.tif"), mtime);

    const auto audit = verify_store(manifest, store.path());
    EXPECT_EQ(audit[0].status, StoreStatus::ok);
    EXPECT_EQ(audit[2].status, StoreStatus::missing);
    write_file_atomic(store / "a.tif", "bit rot");
    EXPECT_EQ(verify_store(manifest, store.path())[0].status, StoreStatus::corrupt);
    const auto third = fetch(manifest, store.path());
    EXPECT_EQ(third.entries[0].status, FetchStatus::fetched);
    EXPECT_EQ(read_file_text(store / "a.tif"), "alpha-bytes");
}

TEST(Fetch, TokenFromEnvironment) {
    EnvGuard env;
    ProductServer server(std::map<std::string, std::string>{{"s.tif", "secret-bytes"}});
    gz_test::TempDir store;
    const auto manifest = parse_manifest(line("s", server.url("secure/s.tif"), sha256_hex("secret-bytes")));

    const auto denied = fetch(manifest, store.path());
    ASSERT_EQ(denied.entries[0].status, FetchStatus::failed);
    EXPECT_NE(denied.entries[0].reason.find("authentication required"), std::string::npos);
    EXPECT_NE(denied.entries[0].reason.find(kTokenEnvVar), std::string::npos);
    EXPECT_EQ(server.last_auth(), "");

    ::setenv(kTokenEnvVar, "s3cret", 1);
    const auto ok = fetch(manifest, store.path());
    EXPECT_EQ(ok.entries[0].status, FetchStatus::fetched);
    EXPECT_EQ(server.last_auth(), "Bearer s3cret");

    fs::remove(store / "s.tif");
    ::setenv(kTokenEnvVar, "wrong", 1);
    const auto rejected = fetch(manifest, store.path());
    EXPECT_NE(rejected.entries[0].reason.find("token rejected"), std::string::npos);
}

TEST(Fetch, FileUrlsAndMissingSources) {
    EnvGuard env;
    gz_test::TempDir src, store;
    write_file_atomic(src / "x.asc", "payload");
    const auto manifest = parse_manifest(line("x", "file://" + (src / "x.asc").string(), sha256_hex("payload")) +
                                         line("y", (src / "nope.asc").string(), sha256_hex("payload")) +
                                         line("z", "ftp://host/z.asc", sha256_hex("payload")));
    const auto r = fetch(manifest, store.path(), {1, std::nullopt, 5});
    EXPECT_EQ(r.entries[0].status, FetchStatus::fetched);
    EXPECT_EQ(r.entries[1].status, FetchStatus::failed);
    EXPECT_NE(r.entries[1].reason.find("cannot open"), std::string::npos);
    EXPECT_NE(r.entries[2].reason.find("unsupported"), std::string::npos);
    EXPECT_EQ(read_file_text(store / "x.asc"), "payload");
}

TEST(Fetch, UnreachableHostFailsPerEntry) {
    EnvGuard env;
    gz_test::TempDir store;
    // port 9 on loopback: nothing listens there in the test environment
    const auto manifest = parse_manifest(line("n", "http://127.0.0.1:9/n.tif", sha256_hex("x")));
    const auto r = fetch(manifest, store.path(), {1, std::nullopt, 2});
    EXPECT_EQ(r.entries[0].status, FetchStatus::failed);
    EXPECT_FALSE(r.entries[0].reason.empty());
}
