#include <httplib.h>

#include "kindred/errors.hpp"
#include "kindred/llm.hpp"

namespace kindred {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ValidationError("endpoint_url", "missing scheme");
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport final : public HttpTransport {
public:
    HttpResponse post_json(const std::string& url, const std::string& bearer_token,
                           const std::string& body, std::chrono::milliseconds timeout) override {
        const SplitUrl target = split_url(url);
        httplib::Client client(target.origin);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());
        if (!bearer_token.empty()) client.set_bearer_token_auth(bearer_token);

        auto res = client.Post(target.path, body, "application/json");
        if (!res) {
            const auto err = res.error();
            if (err == httplib::Error::Read || err == httplib::Error::Write ||
                err == httplib::Error::ConnectionTimeout) {
                throw TimeoutError("request to " + target.origin + " timed out");
            }
            throw ProviderError("request to " + target.origin + " failed: " + httplib::to_string(err));
        }
        return HttpResponse{res->status, res->body};
    }
};

}  // namespace

std::shared_ptr<HttpTransport> make_default_transport() {
    return std::make_shared<HttplibTransport>();
}

}  // namespace kindred
