// Keyboard-first review loop: navigation and verdicts without the mouse.

export type KeyAction =
  | "next"
  | "prev"
  | "pass"
  | "fail"
  | "edit-rule"
  | "refresh"
  | null;

/**
 * Map a key press to a queue action. `editingText` must be true when the
 * focus sits in an input or textarea so typing never triggers verdicts.
 */
export function keyAction(key: string, editingText: boolean): KeyAction {
  if (editingText) {
    return null;
  }
  switch (key) {
    case "j":
    case "J":
    case "ArrowDown":
      return "next";
    case "k":
    case "K":
    case "ArrowUp":
      return "prev";
    case "p":
    case "P":
      return "pass";
    case "f":
    case "F":
      return "fail";
    case "e":
    case "E":
      return "edit-rule";
    case "g":
    case "G":
      return "refresh";
    default:
      return null;
  }
}

export function isTextTarget(tagName: string | undefined): boolean {
  if (!tagName) return false;
  const tag = tagName.toUpperCase();
  return tag === "INPUT" || tag === "TEXTAREA" || tag === "SELECT";
}
