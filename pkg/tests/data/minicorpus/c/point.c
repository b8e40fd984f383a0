#define LIMIT 10

struct point {
    int x;
    int y;
};

int dist2(struct point p, struct point q) {
    int dx = p.x - q.x;
    int dy = p.y - q.y;
    return dx * dx + dy * dy;
}
