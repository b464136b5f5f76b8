import { bootstrap } from "./render.js";

bootstrap();
