import { defineConfig } from "vitest/config";

export default defineConfig({
    build: {
        outDir: "dist",
        sourcemap: true,
    },
    server: {
        proxy: {
            // dev-mode passthrough to a locally running service
            "/patients": "http://127.0.0.1:8040",
            "/sessions": "http://127.0.0.1:8040",
            "/health": "http://127.0.0.1:8040",
        },
    },
    test: {
        environment: "jsdom",
    },
});
