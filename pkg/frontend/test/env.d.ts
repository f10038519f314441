declare module "vitest" {
  interface ProvidedContext {
    e2eBaseUrl: string;
    e2eRatingsPath: string;
  }
}

export {};
