#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>

#include <curl/curl.h>
#include <fcntl.h>
#include <openssl/evp.h>
#include <sys/file.h>
#include <unistd.h>

#include "exspn/dataset.hpp"
#include "exspn/error.hpp"

namespace exspn {

namespace fs = std::filesystem;

namespace {

constexpr const char* kUciRoot = "https://archive.ics.uci.edu/ml/machine-learning-databases/";

std::string uci(const std::string& path) { return std::string(kUciRoot) + path; }

std::string resolve_url(const std::string& url) {
  const char* mirror = std::getenv("EXSPN_UCI_MIRROR");
  const std::string root = kUciRoot;
  if (!mirror || !*mirror || url.rfind(root, 0) != 0) return url;
  std::string base = mirror;
  if (base.back() != '/') base += '/';
  return base + url.substr(root.size());
}

std::size_t append_body(char* data, std::size_t size, std::size_t n, void* user) {
  static_cast<std::string*>(user)->append(data, size * n);
  return size * n;
}

std::string download(const std::string& url) {
  static std::once_flag init;
  std::call_once(init, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
  CURL* curl = curl_easy_init();
  if (!curl) throw NetworkError("cannot initialise the HTTP client");
  std::string body;
  char err[CURL_ERROR_SIZE] = {0};
  curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl, CURLOPT_FAILONERROR, 1L);
  curl_easy_setopt(curl, CURLOPT_CONNECTTIMEOUT, 30L);
  curl_easy_setopt(curl, CURLOPT_ERRORBUFFER, err);
  curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, append_body);
  curl_easy_setopt(curl, CURLOPT_WRITEDATA, &body);
  const CURLcode rc = curl_easy_perform(curl);
  curl_easy_cleanup(curl);
  if (rc != CURLE_OK)
    throw NetworkError("download of '" + url + "' failed: " + (*err ? std::string(err) : curl_easy_strerror(rc)));
  return body;
}

std::string hex_digest(const unsigned char* md, unsigned len) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += digits[md[i] >> 4];
    out += digits[md[i] & 0xf];
  }
  return out;
}

std::string sha256_bytes(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  return hex_digest(md, len);
}

struct Meta {
  std::uintmax_t length = 0;
  std::string sha256;
};

std::optional<Meta> read_meta(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  Meta m;
  std::string key;
  bool has_len = false;
  while (in >> key) {
    if (key == "length") has_len = static_cast<bool>(in >> m.length);
    else if (key == "sha256") in >> m.sha256;
    else in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
  }
  if (!has_len || m.sha256.empty()) return std::nullopt;
  return m;
}

// Exclusive advisory lock on the cache entry for the lifetime of the object.
class EntryLock {
 public:
  explicit EntryLock(const fs::path& path) : fd_(::open(path.c_str(), O_RDWR | O_CREAT, 0644)) {
    if (fd_ < 0) throw IoError("cannot create lock file '" + path.string() + "'");
    ::flock(fd_, LOCK_EX);
  }
  ~EntryLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  EntryLock(const EntryLock&) = delete;
  EntryLock& operator=(const EntryLock&) = delete;

 private:
  int fd_;
};

void write_atomic(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".part";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << bytes;
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

}  // namespace

const std::vector<UciDataset>& uci_registry() {
  static const std::vector<UciDataset> registry = {
      {"abalone", {uci("abalone/abalone.data")}, "data", false, ""},
      {"adult", {uci("adult/adult.data")}, "data", false, ""},
      {"car", {uci("car/car.data")}, "data", false, ""},
      {"mushroom", {uci("mushroom/agaricus-lepiota.data")}, "data", false, ""},
      {"wine_quality",
       {uci("wine-quality/winequality-red.csv"), uci("wine-quality/winequality-white.csv")},
       "csv",
       true,
       ""},
      {"yeast", {uci("yeast/yeast.data")}, "data", false, ""},
  };
  return registry;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_bytes(buf.str());
}

std::string fetch_uci(const std::string& name, const std::string& cache_dir) {
  const UciDataset* entry = nullptr;
  for (const auto& d : uci_registry())
    if (d.name == name) entry = &d;
  if (!entry) {
    std::string names;
    for (const auto& d : uci_registry()) names += (names.empty() ? "" : ", ") + d.name;
    throw InputError("unknown dataset '" + name + "'; supported: " + names);
  }

  const fs::path dir = fs::path(cache_dir) / name;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create cache directory '" + dir.string() + "': " + ec.message());
  const fs::path raw = dir / ("raw." + entry->extension);
  const fs::path meta_path = dir / "meta";
  EntryLock lock(dir / ".lock");

  if (fs::exists(raw)) {
    if (const auto meta = read_meta(meta_path)) {
      const auto length = fs::file_size(raw);
      const auto digest = sha256_file(raw.string());
      if (length != meta->length || digest != meta->sha256)
        throw ChecksumError("cached file '" + raw.string() + "' does not match its recorded length/checksum");
      if (!entry->sha256.empty() && digest != entry->sha256)
        throw ChecksumError("cached file '" + raw.string() + "' does not match the pinned checksum");
      return raw.string();
    }
  }

  std::string bytes;
  for (std::size_t i = 0; i < entry->urls.size(); ++i) {
    std::string part = download(resolve_url(entry->urls[i]));
    if (i > 0 && entry->skip_header_after_first) {
      const auto nl = part.find('\n');
      part = nl == std::string::npos ? std::string() : part.substr(nl + 1);
    }
    if (!bytes.empty() && bytes.back() != '\n') bytes += '\n';
    bytes += part;
  }
  const auto digest = sha256_bytes(bytes);
  if (!entry->sha256.empty() && digest != entry->sha256)
    throw ChecksumError("download of '" + name + "' does not match the pinned checksum");
  write_atomic(raw, bytes);
  write_atomic(meta_path, "length " + std::to_string(bytes.size()) + "\nsha256 " + digest + "\n");
  return raw.string();
}

}  // namespace exspn
