#include <map>
#include <string>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cnndse/catalog.h"
#include "cnndse/fire.h"
#include "cnndse/service.h"
#include "cnndse/types.h"

namespace py = pybind11;

namespace {

std::multimap<std::string, std::string> to_query(const std::map<std::string, std::string>& q) {
  return {q.begin(), q.end()};
}

}  // namespace

PYBIND11_MODULE(_cnndse, m) {
  py::register_exception<cnndse::ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<cnndse::NotFoundError>(m, "NotFoundError", PyExc_LookupError);

  m.def("builtin_names", &cnndse::builtin_names);

  m.def(
      "analyze",
      [](const std::string& arch, std::int64_t batch, std::int64_t bytes, bool bias) {
        const auto doc = nlohmann::json::parse(arch);
        const auto a = cnndse::resolve_architecture(doc, nullptr, "arch");
        return cnndse::Service::analysis(a, batch, bytes, bias).dump();
      },
      py::arg("arch"), py::arg("batch"), py::arg("bytes"), py::arg("bias"));

  m.def("count_design_space", &cnndse::count_design_space, py::arg("slots"),
        py::arg("options"));

  py::class_<cnndse::Service>(m, "Service")
      .def(py::init([](const std::string& workspace) {
             return cnndse::Service(
                 workspace.empty() ? nullptr : std::make_shared<cnndse::Workspace>(workspace));
           }),
           py::arg("workspace") = "")
      .def(
          "request",
          [](const cnndse::Service& s, const std::string& method, const std::string& path,
             const std::map<std::string, std::string>& query, const std::string& body) {
            cnndse::Response r;
            {
              py::gil_scoped_release release;
              r = s.handle(method, path, to_query(query), body);
            }
            return py::make_tuple(r.status, r.body.dump());
          },
          py::arg("method"), py::arg("path"), py::arg("query") = std::map<std::string, std::string>{},
          py::arg("body") = "");
}
