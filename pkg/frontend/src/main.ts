import { ApiClient } from "./api";
import { App } from "./app";

const root = document.getElementById("app");
if (root) {
  const app = new App(root, new ApiClient());
  void app.init();
}
