/** Browser entry point. */

import { bootstrap } from "./boot.js";

const root = document.getElementById("app");
if (root) bootstrap(root);
