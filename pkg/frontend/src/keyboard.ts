export type ReviewAction =
  | "accept"
  | "reject"
  | "skip"
  | "undo"
  | "expand"
  | "retrain"
  | "resync";

export const KEY_BINDINGS: Record<string, ReviewAction> = {
  a: "accept",
  r: "reject",
  s: "skip",
  u: "undo",
  x: "expand",
  t: "retrain",
  z: "resync",
};

export function actionForKey(key: string): ReviewAction | null {
  return KEY_BINDINGS[key.toLowerCase()] ?? null;
}
