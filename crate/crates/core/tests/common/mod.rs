//! Shared synthetic corpus for integration tests: ten small programs with
//! consistent, role-specific local names. Instances of a template differ
//! only in a leading marker string, which sits outside every context window,
//! so all instances of a role produce identical training data.

use std::fs;
use std::path::{Path, PathBuf};

pub const TEMPLATES: [&str; 10] = [
    // 0: request plumbing
    r#"function sendRequest(url, method, callback) {
  var client = createClient();
  client.open(method, url);
  client.onload = function () { callback(client.responseText); };
  client.send(null);
}
"#,
    // 1: accumulator loop
    r#"function sumValues(values) {
  var total = 0;
  for (var index = 0; index < values.length; index = index + 1) {
    total = total + values[index];
  }
  return total;
}
"#,
    // 2: maximum search
    r#"function findLargest(items) {
  var best = items[0];
  var cursor = 1;
  while (cursor < items.length) {
    if (items[cursor] > best) { best = items[cursor]; }
    cursor = cursor + 1;
  }
  return best;
}
"#,
    // 3: string building
    r#"function joinWords(words, separator) {
  var joined = "";
  var position = 0;
  while (position < words.length) {
    if (position > 0) { joined = joined + separator; }
    joined = joined + words[position];
    position = position + 1;
  }
  return joined;
}
"#,
    // 4: handler registry
    r#"function createRegistry() {
  var handlers = [];
  return {
    add: function (handler) { handlers.push(handler); },
    fire: function (payload) {
      var slot = 0;
      while (slot < handlers.length) {
        handlers[slot](payload);
        slot = slot + 1;
      }
    }
  };
}
"#,
    // 5: range clamping
    r#"function clampValue(value, low, high) {
  if (value < low) { return low; }
  if (value > high) { return high; }
  return value;
}
"#,
    // 6: queue
    r#"function makeQueue() {
  var entries = [];
  return {
    push: function (entry) { entries.push(entry); },
    pop: function () {
      if (entries.length === 0) { return null; }
      return entries.shift();
    }
  };
}
"#,
    // 7: config lookup
    r#"function readSetting(settings, key, fallback) {
  var found = settings[key];
  if (found === undefined) { return fallback; }
  return found;
}
"#,
    // 8: counter closure
    r#"function makeCounter(start) {
  var count = start;
  return function () {
    count = count + 1;
    return count;
  };
}
"#,
    // 9: predicate filter
    r#"function filterMatching(records, predicate) {
  var kept = [];
  var at = 0;
  while (at < records.length) {
    if (predicate(records[at])) { kept.push(records[at]); }
    at = at + 1;
  }
  return kept;
}
"#,
];

/// One instance of a template: a unique marker string statement followed by
/// the template body. The marker never enters a context window for q ≤ 3.
pub fn instance(template: usize, copy: usize) -> String {
    format!("\"m-{template}-{copy}\";\n{}", TEMPLATES[template])
}

/// Writes `copies` instances of every template into `dir`, returning the
/// file paths in name order.
pub fn write_corpus(dir: &Path, copies: usize) -> Vec<PathBuf> {
    let mut paths = Vec::new();
    for t in 0..TEMPLATES.len() {
        for c in 0..copies {
            let path = dir.join(format!("t{t:02}_c{c:03}.js"));
            fs::write(&path, instance(t, c)).unwrap();
            paths.push(path);
        }
    }
    paths
}
