import { ApiClient } from "./api.js";
import { App } from "./app.js";

const base = window.location.origin === "null" || window.location.protocol === "file:"
  ? "http://127.0.0.1:8000"
  : window.location.origin;

const api = new ApiClient(base);
const app = new App(document, document.getElementById("app")!, api, window.localStorage);
void app.start();
