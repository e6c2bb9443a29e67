import { defineConfig } from "vite";

export default defineConfig({
  server: {
    proxy: {
      "/sessions": "http://127.0.0.1:8080",
      "/tasks": "http://127.0.0.1:8080",
    },
  },
  test: {
    environment: "jsdom",
  },
});
